#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "japan/matrix.hpp"
#include "japan/mlp.hpp"
#include "japan/rng.hpp"

namespace japan {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 512;
  double learning_rate = 1e-3;
  double decay = 0.999;  // learning-rate factor applied once per epoch
  std::size_t layers = 4;
  std::size_t hidden = 32;
  std::uint64_t seed = 0;
};

// One affine coupling step. mask[i] == 1 marks a pass-through coordinate
// (in the coordinate order current at this layer); the scale and shift nets
// read the masked vector concatenated with the context.
struct CouplingLayer {
  std::vector<std::uint8_t> mask;
  MlpParams scale_net, shift_net;
};

struct FlowOutput {
  std::vector<double> z;
  double log_det = 0.0;
};

// Conditional affine coupling flow with coordinate-reversal permutations
// between consecutive layers. Freshly constructed models have zero nets and
// realise the identity map (up to the permutations).
class FlowModel {
 public:
  FlowModel() = default;
  FlowModel(std::size_t y_dim, std::size_t context_dim, std::size_t n_layers, std::size_t hidden);

  std::size_t y_dim() const { return y_dim_; }
  std::size_t context_dim() const { return context_dim_; }
  std::size_t n_layers() const { return layers_.size(); }
  std::size_t hidden() const { return hidden_; }
  double scale_clamp() const { return s_max_; }

  std::vector<CouplingLayer>& layers() { return layers_; }
  const std::vector<CouplingLayer>& layers() const { return layers_; }

  void init_params(Rng& rng);

  // z = h(y, x) together with log|det ∂h/∂y|.
  FlowOutput forward(std::span<const double> y, std::span<const double> x = {}) const;

  // y = h⁻¹(z, x); second result is log|det ∂h⁻¹/∂z| = -(forward log_det at y).
  std::pair<std::vector<double>, double> inverse(std::span<const double> z,
                                                 std::span<const double> x = {}) const;

  double log_likelihood(std::span<const double> y, std::span<const double> x = {}) const;

  // Batch forms; x has one context row per sample (or zero columns when
  // unconditional). log_det receives one entry per row.
  Matrix forward_batch(const Matrix& y, const Matrix& x, std::vector<double>& log_det) const;
  Matrix inverse_batch(const Matrix& z, const Matrix& x, std::vector<double>& log_det_inv) const;
  std::vector<double> log_likelihood_batch(const Matrix& y, const Matrix& x) const;

  // n draws y_i = h⁻¹(z_i, x) with z_i ~ N(0, I), all under the same context.
  Matrix sample(std::size_t n, std::span<const double> x, Rng& rng) const;

  std::string to_json() const;
  static FlowModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static FlowModel load(const std::string& path);

 private:
  std::size_t y_dim_ = 0;
  std::size_t context_dim_ = 0;
  std::size_t hidden_ = 0;
  double s_max_ = 5.0;
  std::vector<CouplingLayer> layers_;

  friend struct FlowTrainer;
};

struct TrainResult {
  FlowModel model;
  std::vector<double> epoch_nll;  // mean negative log-likelihood per epoch
};

// Maximum-likelihood training with minibatch Adam. Throws TrainingError
// (naming the epoch) if the loss goes non-finite.
TrainResult train_nll(const Matrix& train_y, const Matrix& train_x, const TrainConfig& config);

// The model's parameter tensors in optimizer order (per layer: scale then
// shift net, each w1,b1,w2,b2,w3,b3).
std::vector<Matrix*> flow_params(FlowModel& model);

// Mean negative log-likelihood of a batch and its exact gradient for every
// parameter, in flow_params order. This is the training objective; exposed
// for custom training loops and gradient verification.
double flow_nll_grads(FlowModel& model, const Matrix& y, const Matrix& x,
                      std::vector<Matrix>& grads);

}  // namespace japan

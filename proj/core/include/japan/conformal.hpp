#pragma once

#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "japan/flow.hpp"
#include "japan/matrix.hpp"

namespace japan {

enum class Variant {
  Original,                 // log p̂(y | x) under the conditional flow
  Unconditional,            // log p̂_Ŷ(y) under a flow fit to predictions
  ConditionalOnPrediction,  // log p̂(y | μ(x))
  Posterior,                // log p̂(μ(x) | y)
  Latent,                   // log p_Z(h(y, x)), no volume term
  TauAdaptiveGlobal,        // latent calibration, threshold τ̃ + Φ(h⁻¹(z_ε, x), x)
  TauAdaptiveKnn,           // latent calibration, threshold τ̃ + mean Φ over K-NN
};

const char* variant_name(Variant v);

// Ridge regression x → ŷ fit by normal equations on the train split.
struct BasePredictor {
  Matrix coef;  // c×d
  std::vector<double> intercept;
  double lambda = 0.0;

  std::vector<double> predict(std::span<const double> x) const;
  Matrix predict_batch(const Matrix& x) const;
};

BasePredictor fit_base_predictor(const Matrix& train_x, const Matrix& train_y, double lambda);

struct CalibrationResult {
  double epsilon = 0.0;
  std::vector<double> sorted_scores;  // ascending
  std::size_t k = 0;                  // ⌊ε·(m+1)⌋
  double tau = -std::numeric_limits<double>::infinity();  // α_(k); -inf when k = 0

  // τ-adaptive state: the latent vector of the calibration pair attaining
  // α_(k) (ties keep the smallest index), and per-point (x_j, Φ_j).
  std::vector<double> anchor_z;
  Matrix phi_x;
  std::vector<double> phi;

  std::size_t m() const { return sorted_scores.size(); }
};

// k = ⌊ε·(m+1)⌋; τ_ε is the k-th smallest score, or -inf when k = 0.
CalibrationResult calibrate(std::vector<double> scores, double epsilon);

// (1 + #{α_i ≤ α*}) / (m + 1)
double p_value(const std::vector<double>& scores, double alpha_star);

// Conformity score of a candidate pair under the given variant. For the
// τ-adaptive variants this is the latent score used for calibration;
// membership uses the full log-likelihood against an adaptive threshold.
double conformity_score(Variant v, const FlowModel& flow, const BasePredictor* predictor,
                        std::span<const double> x, std::span<const double> y);
std::vector<double> conformity_scores(Variant v, const FlowModel& flow,
                                      const BasePredictor* predictor, const Matrix& x,
                                      const Matrix& y);

struct PredictionRegion {
  Variant variant = Variant::Original;
  std::size_t knn_k = 0;
  std::shared_ptr<const FlowModel> flow;
  std::shared_ptr<const BasePredictor> predictor;
  CalibrationResult cal;

  bool contains(std::span<const double> x, std::span<const double> y) const;
  std::vector<char> contains_batch(const Matrix& x, const Matrix& y) const;

  // Effective threshold at x: τ_ε for the fixed-threshold variants, the
  // adaptive value for the τ-adaptive ones.
  double threshold(std::span<const double> x) const;

  // The score membership compares against threshold(x).
  double membership_score(std::span<const double> x, std::span<const double> y) const;
};

// Scores the calibration split and assembles a ready-to-query region.
PredictionRegion make_region(Variant v, std::size_t knn_k, std::shared_ptr<const FlowModel> flow,
                             std::shared_ptr<const BasePredictor> predictor, const Matrix& cal_x,
                             const Matrix& cal_y, double epsilon);

// τ_ε(x) = τ̃_ε + Φ(h⁻¹(z_ε, x), x)
double tau_adaptive_threshold(const PredictionRegion& region, std::span<const double> x);

// τ_ε(x) = τ̃_ε + mean Φ_j over the K nearest calibration inputs
// (Euclidean distance, ties broken by calibration index order).
double knn_threshold(const PredictionRegion& region, std::span<const double> x);

}  // namespace japan

#pragma once

#include <utility>

#include "japan/matrix.hpp"
#include "japan/rng.hpp"

namespace japan {

// input → hidden → hidden → output, ReLU on the hidden layers, identity
// output. Biases are stored as 1×width matrices.
struct MlpParams {
  std::size_t in = 0, hidden = 0, out = 0;
  Matrix w1, b1, w2, b2, w3, b3;

  MlpParams() = default;
  MlpParams(std::size_t in_dim, std::size_t hidden_dim, std::size_t out_dim)
      : in(in_dim),
        hidden(hidden_dim),
        out(out_dim),
        w1(in_dim, hidden_dim),
        b1(1, hidden_dim),
        w2(hidden_dim, hidden_dim),
        b2(1, hidden_dim),
        w3(hidden_dim, out_dim),
        b3(1, out_dim) {}

  // Uniform ±sqrt(6/(fan_in+fan_out)) weights, zero biases.
  void glorot_init(Rng& rng);
};

struct MlpGrads {
  Matrix w1, b1, w2, b2, w3, b3;
  explicit MlpGrads(const MlpParams& p)
      : w1(p.in, p.hidden),
        b1(1, p.hidden),
        w2(p.hidden, p.hidden),
        b2(1, p.hidden),
        w3(p.hidden, p.out),
        b3(1, p.out) {}
};

// Post-activation hidden states kept around for the backward pass.
struct MlpCache {
  Matrix h1, h2;
};

Matrix mlp_forward(const MlpParams& p, const Matrix& input);
Matrix mlp_forward_cached(const MlpParams& p, const Matrix& input, MlpCache& cache);

// Exact gradients of <output, output_grad> w.r.t. every parameter and the
// input, given the cached forward activations.
MlpGrads mlp_backward_cached(const MlpParams& p, const Matrix& input, const MlpCache& cache,
                             const Matrix& output_grad, Matrix& input_grad);

// Convenience wrapper that redoes the forward pass.
std::pair<MlpGrads, Matrix> mlp_backward(const MlpParams& p, const Matrix& input,
                                         const Matrix& output_grad);

}  // namespace japan

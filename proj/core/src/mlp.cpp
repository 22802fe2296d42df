#include "japan/mlp.hpp"

#include <cmath>

#include "japan/errors.hpp"

namespace japan {

namespace {

void glorot_fill(Matrix& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
    }
  }
}

void add_bias_relu(Matrix& m, const Matrix& bias) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double* r = m.row(i);
    const double* b = bias.row(0);
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double v = r[j] + b[j];
      r[j] = v > 0.0 ? v : 0.0;
    }
  }
}

void add_bias(Matrix& m, const Matrix& bias) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double* r = m.row(i);
    const double* b = bias.row(0);
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] += b[j];
  }
}

// d(relu)/dx is 0 where the activation was clipped; `act` holds post-ReLU
// values, so the mask is act > 0.
void relu_mask(Matrix& grad, const Matrix& act) {
  for (std::size_t i = 0; i < grad.rows(); ++i) {
    double* g = grad.row(i);
    const double* a = act.row(i);
    for (std::size_t j = 0; j < grad.cols(); ++j) {
      if (a[j] <= 0.0) g[j] = 0.0;
    }
  }
}

Matrix column_sums(const Matrix& m) {
  Matrix s(1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) s(0, j) += r[j];
  }
  return s;
}

}  // namespace

void MlpParams::glorot_init(Rng& rng) {
  glorot_fill(w1, in, hidden, rng);
  glorot_fill(w2, hidden, hidden, rng);
  glorot_fill(w3, hidden, out, rng);
  b1.fill(0.0);
  b2.fill(0.0);
  b3.fill(0.0);
}

Matrix mlp_forward_cached(const MlpParams& p, const Matrix& input, MlpCache& cache) {
  if (input.cols() != p.in) throw DimensionError("mlp_forward: input has wrong width");
  cache.h1 = matmul(input, p.w1);
  add_bias_relu(cache.h1, p.b1);
  cache.h2 = matmul(cache.h1, p.w2);
  add_bias_relu(cache.h2, p.b2);
  Matrix out = matmul(cache.h2, p.w3);
  add_bias(out, p.b3);
  return out;
}

Matrix mlp_forward(const MlpParams& p, const Matrix& input) {
  MlpCache cache;
  return mlp_forward_cached(p, input, cache);
}

MlpGrads mlp_backward_cached(const MlpParams& p, const Matrix& input, const MlpCache& cache,
                             const Matrix& output_grad, Matrix& input_grad) {
  if (output_grad.cols() != p.out || output_grad.rows() != input.rows()) {
    throw DimensionError("mlp_backward: output_grad has wrong shape");
  }
  MlpGrads g(p);

  g.w3 = matmul_tn(cache.h2, output_grad);
  g.b3 = column_sums(output_grad);

  Matrix d2 = matmul_nt(output_grad, p.w3);
  relu_mask(d2, cache.h2);
  g.w2 = matmul_tn(cache.h1, d2);
  g.b2 = column_sums(d2);

  Matrix d1 = matmul_nt(d2, p.w2);
  relu_mask(d1, cache.h1);
  g.w1 = matmul_tn(input, d1);
  g.b1 = column_sums(d1);

  input_grad = matmul_nt(d1, p.w1);
  return g;
}

std::pair<MlpGrads, Matrix> mlp_backward(const MlpParams& p, const Matrix& input,
                                         const Matrix& output_grad) {
  MlpCache cache;
  mlp_forward_cached(p, input, cache);
  Matrix input_grad;
  MlpGrads g = mlp_backward_cached(p, input, cache, output_grad, input_grad);
  return {std::move(g), std::move(input_grad)};
}

}  // namespace japan

#include "japan/adam.hpp"

#include <cmath>

#include "japan/errors.hpp"

namespace japan {

AdamState AdamState::init(const std::vector<Matrix*>& params, double learning_rate, double decay) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.decay = decay;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const Matrix* p : params) {
    s.m.emplace_back(p->rows(), p->cols());
    s.v.emplace_back(p->rows(), p->cols());
  }
  return s;
}

void adam_update(std::vector<Matrix*>& params, const std::vector<Matrix>& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DimensionError("adam_update: parameter/gradient count mismatch");
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& g = grads[k];
    if (p.rows() != g.rows() || p.cols() != g.cols()) {
      throw DimensionError("adam_update: gradient shape mismatch");
    }
    double* pd = p.data();
    const double* gd = g.data();
    double* md = state.m[k].data();
    double* vd = state.v[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!std::isfinite(gd[i])) throw TrainingError("adam_update: non-finite gradient");
      md[i] = state.beta1 * md[i] + (1.0 - state.beta1) * gd[i];
      vd[i] = state.beta2 * vd[i] + (1.0 - state.beta2) * gd[i] * gd[i];
      const double mhat = md[i] / c1;
      const double vhat = vd[i] / c2;
      pd[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace japan

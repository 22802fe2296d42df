#pragma once

#include <cstdint>
#include <vector>

#include "japan/matrix.hpp"

namespace japan {

// Adam with bias correction over an ordered list of parameter tensors.
// The learning rate is decayed once per epoch by `decay` via end_epoch().
struct AdamState {
  std::vector<Matrix> m, v;
  std::uint64_t t = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay = 0.999;

  static AdamState init(const std::vector<Matrix*>& params, double learning_rate, double decay);

  void end_epoch() { learning_rate *= decay; }
};

// One Adam step; params are updated in place and state.t is incremented.
// Throws TrainingError on a non-finite gradient.
void adam_update(std::vector<Matrix*>& params, const std::vector<Matrix>& grads, AdamState& state);

}  // namespace japan

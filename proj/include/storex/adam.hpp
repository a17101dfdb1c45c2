#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "storex/ndiff.hpp"

namespace storex::nd {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Decoupled (AdamW-style) decay: p <- p - lr * weight_decay * p each step.
  double weight_decay = 0.0;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  uint64_t step = 0;

  explicit AdamState(AdamConfig cfg = {}) : config(cfg) {}
};

/// One bias-corrected Adam update of each params[i].value using params[i].grad.
/// Moments are created on the first call; later calls must pass the same shapes.
void adam_step(std::span<Tensor* const> params, AdamState& state);

}  // namespace storex::nd

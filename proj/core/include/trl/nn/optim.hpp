#pragma once

#include "trl/nn/parameters.hpp"

namespace trl::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. Moments and the step counter live in the store;
/// gradients are zeroed after the update.
void adam_step(ParameterStore& store, const AdamConfig& cfg);

/// Rescales gradients so their global norm is at most `max_norm`. Returns
/// the norm before clipping.
double clip_grad_norm(ParameterStore& store, double max_norm);

}  // namespace trl::nn

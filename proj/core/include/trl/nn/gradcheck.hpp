#pragma once

#include <cstdint>
#include <functional>

#include "trl/nn/parameters.hpp"
#include "trl/nn/tape.hpp"

namespace trl::nn {

struct GradCheckOptions {
  double epsilon = 1e-5;
  // 0 checks every coordinate; otherwise this many random unit directions.
  std::size_t probes = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checks = 0;
};

using LossBuilder = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients of `loss` with central differences
/// (f(p+εd) − f(p−εd)) / 2ε. Relative error uses max(|a|, |b|, 1e-12) as the
/// denominator. Gradients in `store` are zeroed before and after.
GradCheckResult finite_difference_check(const LossBuilder& loss, ParameterStore& store, const GradCheckOptions& opts = {});

}  // namespace trl::nn

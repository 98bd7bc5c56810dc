#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace trl::core {

/// How a per-reference score is reduced over a reference set.
enum class Aggregation { mean, max };

inline double aggregate(std::span<const double> scores, Aggregation agg) {
  double acc = agg == Aggregation::max ? scores.front() : 0.0;
  for (double s : scores) acc = agg == Aggregation::max ? std::max(acc, s) : acc + s;
  return agg == Aggregation::max ? acc : acc / static_cast<double>(scores.size());
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Rewards are snapped to a 2^-40 grid. Sums and differences of such values
// (|v| < 2^12) are exact in double precision, so per-step increments add
// back to the terminal score bit-for-bit in any order.
inline constexpr double kRewardQuantum = 1.0 / 1099511627776.0;

inline double quantize_reward(double v) { return std::nearbyint(v / kRewardQuantum) * kRewardQuantum; }

/// r_t = q(S_t) − q(S_{t−1}) with q(S_0) = 0.
inline std::vector<double> telescoping_increments(std::span<const double> prefix_scores) {
  std::vector<double> out(prefix_scores.size());
  double prev = 0.0;
  for (std::size_t t = 0; t < prefix_scores.size(); ++t) {
    const double cur = quantize_reward(prefix_scores[t]);
    out[t] = cur - prev;
    prev = cur;
  }
  return out;
}

}  // namespace trl::core

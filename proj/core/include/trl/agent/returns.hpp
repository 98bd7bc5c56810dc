#pragma once

#include <span>
#include <vector>

namespace trl::agent {

/// Undiscounted (by default) λ-returns. rewards[t] is the reward for the
/// action taken in the state valued by values[t]; the state after the last
/// action is terminal with value 0. Computed right to left as
///   G_t = r_t + γ((1 − λ) V_{t+1} + λ G_{t+1}),  G_{T−1} = r_{T−1},
/// so λ = 1 gives the Monte-Carlo tail sum and λ = 0 gives r_t + γ V_{t+1}.
std::vector<double> lambda_returns(std::span<const double> rewards, std::span<const double> values, double lambda,
                                   double gamma = 1.0);

/// A_t = G_t − V_t.
std::vector<double> advantages(std::span<const double> returns, std::span<const double> values);

/// Affine min-max map of a batch onto [lo, hi] (default [0.05, 0.95]); a
/// constant batch maps to the midpoint.
class UnitMap {
 public:
  static constexpr double kLow = 0.05;
  static constexpr double kHigh = 0.95;

  UnitMap() = default;
  static UnitMap fit(std::span<const double> values);

  double apply(double x) const { return scale_ == 0.0 ? 0.5 * (kLow + kHigh) : kLow + (x - min_) * scale_; }
  /// Inverse map; a degenerate (constant) fit maps everything back to that constant.
  double invert(double y) const { return scale_ == 0.0 ? min_ : min_ + (y - kLow) / scale_; }

  double min() const { return min_; }
  double max() const { return max_; }

 private:
  double min_ = 0.0;
  double max_ = 0.0;
  double scale_ = 0.0;
};

std::vector<double> normalize_unit(std::span<const double> values);

}  // namespace trl::agent

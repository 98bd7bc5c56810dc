#include "trl/agent/returns.hpp"

#include <algorithm>
#include <string>

#include "trl/error.hpp"

namespace trl::agent {

std::vector<double> lambda_returns(std::span<const double> rewards, std::span<const double> values, double lambda,
                                   double gamma) {
  if (rewards.size() != values.size())
    throw Error("lambda_returns: " + std::to_string(rewards.size()) + " rewards but " + std::to_string(values.size()) +
                " values");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("lambda_returns: lambda must lie in [0, 1]");
  const std::size_t T = rewards.size();
  std::vector<double> G(T);
  if (T == 0) return G;
  G[T - 1] = rewards[T - 1];
  for (std::size_t t = T - 1; t-- > 0;) G[t] = rewards[t] + gamma * ((1.0 - lambda) * values[t + 1] + lambda * G[t + 1]);
  return G;
}

std::vector<double> advantages(std::span<const double> returns, std::span<const double> values) {
  if (returns.size() != values.size()) throw Error("advantages: length mismatch");
  std::vector<double> A(returns.size());
  for (std::size_t t = 0; t < A.size(); ++t) A[t] = returns[t] - values[t];
  return A;
}

UnitMap UnitMap::fit(std::span<const double> values) {
  if (values.empty()) throw Error("normalize_unit: empty input");
  UnitMap m;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  m.min_ = *lo;
  m.max_ = *hi;
  m.scale_ = m.max_ > m.min_ ? (kHigh - kLow) / (m.max_ - m.min_) : 0.0;
  return m;
}

std::vector<double> normalize_unit(std::span<const double> values) {
  const UnitMap m = UnitMap::fit(values);
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(m.apply(values[i]), UnitMap::kLow, UnitMap::kHigh);
  return out;
}

}  // namespace trl::agent

#include "trl/agent/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <spdlog/spdlog.h>

#include "trl/error.hpp"

namespace trl::agent {

nn::Var policy_gradient_loss(std::span<const nn::Var> log_probs, std::span<const double> advantages) {
  if (log_probs.size() != advantages.size())
    throw Error("policy_gradient_loss: " + std::to_string(log_probs.size()) + " log-probs but " +
                std::to_string(advantages.size()) + " advantages");
  if (log_probs.empty()) throw Error("policy_gradient_loss: empty trajectory");
  std::vector<nn::Var> terms;
  terms.reserve(log_probs.size());
  for (std::size_t t = 0; t < log_probs.size(); ++t) {
    if (!std::isfinite(advantages[t])) throw Error("policy_gradient_loss: missing or non-finite advantage");
    terms.push_back(nn::scale(log_probs[t], -advantages[t]));
  }
  return nn::sum(nn::concat(std::span<const nn::Var>(terms)));
}

namespace {

void check_targets(std::span<const double> q, std::size_t n) {
  if (q.size() != n) throw Error("critic_kl_loss: length mismatch");
  if (q.empty()) throw Error("critic_kl_loss: empty input");
  for (double x : q)
    if (!(x >= 0.0 && x <= 1.0)) throw Error("critic_kl_loss: targets must lie in [0, 1]");
}

}  // namespace

nn::Var critic_kl_loss(std::span<const double> q, std::span<const nn::Var> v) {
  check_targets(q, v.size());
  std::vector<nn::Var> terms;
  terms.reserve(v.size());
  for (std::size_t t = 0; t < v.size(); ++t) {
    const double raw = v[t].scalar();
    if (raw < kProbabilityFloor || raw > 1.0 - kProbabilityFloor)
      spdlog::warn("critic_kl_loss: value {} clamped to [{}, {}]", raw, kProbabilityFloor, 1.0 - kProbabilityFloor);
    nn::Var vc = nn::clamp(v[t], kProbabilityFloor, 1.0 - kProbabilityFloor);
    nn::Var log_v = nn::log(vc);
    nn::Var log_1mv = nn::log(nn::add_const(nn::scale(vc, -1.0), 1.0));
    terms.push_back(nn::add(nn::scale(log_v, -q[t]), nn::scale(log_1mv, -(1.0 - q[t]))));
  }
  return nn::sum(nn::concat(std::span<const nn::Var>(terms)));
}

double critic_kl_loss_value(std::span<const double> q, std::span<const double> v) {
  check_targets(q, v.size());
  double s = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    const double vc = std::clamp(v[t], kProbabilityFloor, 1.0 - kProbabilityFloor);
    s -= q[t] * std::log(vc) + (1.0 - q[t]) * std::log(1.0 - vc);
  }
  return s;
}

double bernoulli_entropy(double q) {
  double h = 0.0;
  if (q > 0.0) h -= q * std::log(q);
  if (q < 1.0) h -= (1.0 - q) * std::log(1.0 - q);
  return h;
}

}  // namespace trl::agent

#pragma once

#include <span>

#include "trl/nn/tape.hpp"

namespace trl::agent {

/// −Σ_t A_t · log π(a_t | s_t). Advantages are constants; `log_probs` are
/// traced scalars of the chosen actions.
nn::Var policy_gradient_loss(std::span<const nn::Var> log_probs, std::span<const double> advantages);

inline constexpr double kProbabilityFloor = 1e-6;

/// Σ_t −[q_t ln v_t + (1 − q_t) ln(1 − v_t)], i.e. KL(Bern(q)‖Bern(v)) +
/// H(Bern(q)). Targets q are constants; v is clamped to [1e-6, 1 − 1e-6]
/// with a logged warning when the clamp engages.
nn::Var critic_kl_loss(std::span<const double> q, std::span<const nn::Var> v);
double critic_kl_loss_value(std::span<const double> q, std::span<const double> v);

double bernoulli_entropy(double q);

}  // namespace trl::agent

#pragma once

#include <random>
#include <vector>

#include "trl/agent/decode.hpp"
#include "trl/agent/networks.hpp"
#include "trl/harness/config.hpp"
#include "trl/harness/experiment.hpp"

namespace trl::harness {

agent::NetworkConfig network_config(const TrainConfig& cfg, const core::Corpus& corpus);

/// One teacher-forced pass over every (scene, reference) pair of `corpus`
/// in shuffled mini-batches. Returns the mean per-token cross-entropy (nats).
double ml_epoch(agent::PolicyNetwork& policy, const core::Corpus& corpus, const TrainConfig& cfg, std::mt19937_64& rng);

/// Teacher-forced per-token cross-entropy without updating anything.
double ml_cross_entropy(const agent::PolicyNetwork& policy, const core::Corpus& corpus);

/// `epochs` calls of ml_epoch; the loss curve has one entry per epoch.
std::vector<double> pretrain_ml(agent::PolicyNetwork& policy, const core::Corpus& corpus, std::size_t epochs,
                                const TrainConfig& cfg, std::mt19937_64& rng);

struct AcEpochStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double mean_reward = 0.0;  // mean total episode reward
};

/// One pass over the scenes of `corpus` in mini-batches: sample an episode
/// per scene, reward it, form λ-returns and advantages, and update the
/// critic with the KL loss. When `update_actor` is set the policy also takes
/// a policy-gradient step; otherwise the policy must be frozen.
///
/// Critic targets: a min-max UnitMap is fitted to the batch's Monte-Carlo
/// returns; q = map(G) clamped to [0.05, 0.95], and the critic's normalized
/// outputs are mapped back through the inverse for bootstrapping and
/// advantages.
AcEpochStats actor_critic_epoch(agent::PolicyNetwork& policy, agent::CriticNetwork& critic, const RewardFunction& reward,
                                const core::Corpus& corpus, const TrainConfig& cfg, std::mt19937_64& rng, bool update_actor);

/// Critic pretraining against a fixed policy; throws unless the policy
/// store is frozen. Returns the per-epoch critic loss.
std::vector<double> pretrain_critic(agent::CriticNetwork& critic, const agent::PolicyNetwork& frozen_policy,
                                    const RewardFunction& reward, const core::Corpus& corpus, std::size_t epochs,
                                    const TrainConfig& cfg, std::mt19937_64& rng);

std::vector<AcEpochStats> train_actor_critic(agent::PolicyNetwork& policy, agent::CriticNetwork& critic,
                                             const RewardFunction& reward, const core::Corpus& corpus, std::size_t epochs,
                                             const TrainConfig& cfg, std::mt19937_64& rng);

/// Mean total reward of `episodes_per_scene` sampled episodes per scene.
double mean_sampled_reward(const agent::PolicyNetwork& policy, const RewardFunction& reward, const core::Corpus& corpus,
                           std::size_t max_len, std::size_t episodes_per_scene, std::uint64_t seed);

}  // namespace trl::harness

#include "trl/harness/training.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

#include "trl/agent/losses.hpp"
#include "trl/agent/returns.hpp"
#include "trl/error.hpp"
#include "trl/nn/optim.hpp"

namespace trl::harness {

agent::NetworkConfig network_config(const TrainConfig& cfg, const core::Corpus& corpus) {
  if (corpus.scenes.empty()) throw Error("corpus is empty");
  return {corpus.vocabulary.size(), corpus.feature_dim(), cfg.d_emb, cfg.d_h};
}

namespace {

// Teacher-forced negative log-likelihood of reference + end marker.
nn::Var sequence_nll(nn::Tape& tape, const agent::PolicyNetwork& policy, const core::Scene& scene,
                     const core::TokenSequence& ref) {
  nn::Var ctx = policy.encode_context(tape, scene.features);
  agent::PolicyNetwork::State s = policy.initial_state(tape), next;
  core::TokenId prev = core::kStart;
  std::vector<nn::Var> terms;
  terms.reserve(ref.size() + 1);
  for (std::size_t t = 0; t <= ref.size(); ++t) {
    const core::TokenId target = t < ref.size() ? ref[t] : core::kEnd;
    nn::Var logp = policy.step(tape, prev, s, ctx, next);
    s = std::move(next);
    terms.push_back(nn::pick(logp, target));
    prev = target;
  }
  return nn::scale(nn::sum(nn::concat(std::span<const nn::Var>(terms))), -1.0);
}

void clip_and_step(nn::ParameterStore& store, double lr, double clip) {
  if (clip > 0.0) nn::clip_grad_norm(store, clip);
  nn::adam_step(store, nn::AdamConfig{lr});
}

}  // namespace

double ml_epoch(agent::PolicyNetwork& policy, const core::Corpus& corpus, const TrainConfig& cfg, std::mt19937_64& rng) {
  if (corpus.scenes.empty()) throw Error("pretrain_ml: corpus is empty");
  std::vector<std::pair<std::size_t, std::size_t>> items;
  for (std::size_t s = 0; s < corpus.scenes.size(); ++s)
    for (std::size_t r = 0; r < corpus.scenes[s].references.size(); ++r) items.emplace_back(s, r);
  std::shuffle(items.begin(), items.end(), rng);

  double total_nll = 0.0;
  std::size_t total_tokens = 0;
  for (std::size_t start = 0; start < items.size(); start += cfg.batch) {
    const std::size_t end = std::min(items.size(), start + cfg.batch);
    std::size_t batch_tokens = 0;
    for (std::size_t k = start; k < end; ++k)
      batch_tokens += corpus.scenes[items[k].first].references[items[k].second].size() + 1;
    for (std::size_t k = start; k < end; ++k) {
      const auto& scene = corpus.scenes[items[k].first];
      nn::Tape tape;
      nn::Var nll = sequence_nll(tape, policy, scene, scene.references[items[k].second]);
      total_nll += nll.scalar();
      tape.backward(nn::scale(nll, 1.0 / static_cast<double>(batch_tokens)));
    }
    total_tokens += batch_tokens;
    clip_and_step(policy.store(), cfg.lr_ml, cfg.grad_clip);
  }
  return total_nll / static_cast<double>(total_tokens);
}

double ml_cross_entropy(const agent::PolicyNetwork& policy, const core::Corpus& corpus) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& scene : corpus.scenes)
    for (const auto& ref : scene.references) {
      nn::Tape tape;
      total += sequence_nll(tape, policy, scene, ref).scalar();
      tokens += ref.size() + 1;
    }
  return tokens == 0 ? 0.0 : total / static_cast<double>(tokens);
}

std::vector<double> pretrain_ml(agent::PolicyNetwork& policy, const core::Corpus& corpus, std::size_t epochs,
                                const TrainConfig& cfg, std::mt19937_64& rng) {
  if (corpus.scenes.empty()) throw Error("pretrain_ml: corpus is empty");
  std::vector<double> curve;
  for (std::size_t e = 0; e < epochs; ++e) curve.push_back(ml_epoch(policy, corpus, cfg, rng));
  return curve;
}

namespace {

// `actor` is the policy's own store when the policy is being trained, null
// when it only samples.
AcEpochStats ac_epoch(const agent::PolicyNetwork& policy, nn::ParameterStore* actor, agent::CriticNetwork& critic,
                      const RewardFunction& reward, const core::Corpus& corpus, const TrainConfig& cfg, std::mt19937_64& rng) {
  if (corpus.scenes.empty()) throw Error("actor-critic: corpus is empty");
  const bool update_actor = actor != nullptr;

  std::vector<std::size_t> order(corpus.scenes.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  AcEpochStats stats;
  std::size_t episodes = 0;
  for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
    const std::size_t end = std::min(order.size(), start + cfg.batch);
    const std::size_t B = end - start;

    struct Item {
      std::unique_ptr<nn::Tape> policy_tape, critic_tape;
      agent::TracedEpisode ep;
      std::vector<nn::Var> values;
      std::vector<double> rewards, mc;
    };
    std::vector<Item> items(B);
    std::vector<double> all_mc;
    for (std::size_t k = 0; k < B; ++k) {
      const auto& scene = corpus.scenes[order[start + k]];
      Item& it = items[k];
      it.policy_tape = std::make_unique<nn::Tape>();
      it.ep = agent::sample_episode_traced(*it.policy_tape, policy, scene.features, cfg.max_len, rng);
      it.rewards = reward.step_rewards(scene, it.ep.actions);
      it.critic_tape = std::make_unique<nn::Tape>();
      it.values = critic.values(*it.critic_tape, scene.features, it.ep.actions);
      it.mc = agent::lambda_returns(it.rewards, std::vector<double>(it.rewards.size(), 0.0), 1.0, cfg.gamma);
      all_mc.insert(all_mc.end(), it.mc.begin(), it.mc.end());
      stats.mean_reward += std::accumulate(it.rewards.begin(), it.rewards.end(), 0.0);
    }
    const agent::UnitMap map = agent::UnitMap::fit(all_mc);

    for (auto& it : items) {
      const std::size_t T = it.values.size();
      std::vector<double> v_ret(T);
      for (std::size_t t = 0; t < T; ++t) v_ret[t] = map.invert(std::clamp(it.values[t].scalar(), 0.0, 1.0));
      const auto G = agent::lambda_returns(it.rewards, v_ret, cfg.lambda, cfg.gamma);
      std::vector<double> q(T);
      for (std::size_t t = 0; t < T; ++t) q[t] = std::clamp(map.apply(G[t]), agent::UnitMap::kLow, agent::UnitMap::kHigh);

      nn::Var closs = nn::scale(agent::critic_kl_loss(q, it.values), 1.0 / static_cast<double>(B));
      stats.critic_loss += closs.scalar();
      it.critic_tape->backward(closs);

      if (update_actor) {
        const auto A = agent::advantages(G, v_ret);
        nn::Var ploss = nn::scale(agent::policy_gradient_loss(it.ep.log_probs, A), 1.0 / static_cast<double>(B));
        stats.actor_loss += ploss.scalar();
        it.policy_tape->backward(ploss);
      }
    }
    clip_and_step(critic.store(), cfg.lr_critic, cfg.grad_clip);
    if (update_actor) clip_and_step(*actor, cfg.lr_actor, cfg.grad_clip);
    episodes += B;
  }
  const double batches = static_cast<double>((order.size() + cfg.batch - 1) / cfg.batch);
  stats.actor_loss /= batches;
  stats.critic_loss /= batches;
  stats.mean_reward /= static_cast<double>(episodes);
  return stats;
}

}  // namespace

AcEpochStats actor_critic_epoch(agent::PolicyNetwork& policy, agent::CriticNetwork& critic, const RewardFunction& reward,
                                const core::Corpus& corpus, const TrainConfig& cfg, std::mt19937_64& rng, bool update_actor) {
  if (!update_actor && !policy.store().frozen()) throw Error("critic pretraining requires a frozen policy");
  if (update_actor && policy.store().frozen()) throw Error("actor-critic: policy is frozen");
  return ac_epoch(policy, update_actor ? &policy.store() : nullptr, critic, reward, corpus, cfg, rng);
}

std::vector<double> pretrain_critic(agent::CriticNetwork& critic, const agent::PolicyNetwork& frozen_policy,
                                    const RewardFunction& reward, const core::Corpus& corpus, std::size_t epochs,
                                    const TrainConfig& cfg, std::mt19937_64& rng) {
  if (!frozen_policy.store().frozen()) throw Error("critic pretraining requires a frozen policy");
  std::vector<double> curve;
  for (std::size_t e = 0; e < epochs; ++e)
    curve.push_back(ac_epoch(frozen_policy, nullptr, critic, reward, corpus, cfg, rng).critic_loss);
  return curve;
}

std::vector<AcEpochStats> train_actor_critic(agent::PolicyNetwork& policy, agent::CriticNetwork& critic,
                                             const RewardFunction& reward, const core::Corpus& corpus, std::size_t epochs,
                                             const TrainConfig& cfg, std::mt19937_64& rng) {
  std::vector<AcEpochStats> out;
  for (std::size_t e = 0; e < epochs; ++e) out.push_back(actor_critic_epoch(policy, critic, reward, corpus, cfg, rng, true));
  return out;
}

double mean_sampled_reward(const agent::PolicyNetwork& policy, const RewardFunction& reward, const core::Corpus& corpus,
                           std::size_t max_len, std::size_t episodes_per_scene, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& scene : corpus.scenes)
    for (std::size_t k = 0; k < episodes_per_scene; ++k) {
      nn::Tape tape;
      const auto ep = agent::sample_episode_traced(tape, policy, scene.features, max_len, rng);
      const auto r = reward.step_rewards(scene, ep.actions);
      total += std::accumulate(r.begin(), r.end(), 0.0);
      ++n;
    }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

}  // namespace trl::harness

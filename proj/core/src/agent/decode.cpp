#include "trl/agent/decode.hpp"

#include <algorithm>
#include <cmath>

#include "trl/error.hpp"

namespace trl::agent {

std::size_t sample_index(std::span<const double> probs, std::mt19937_64& rng) {
  const double u = std::generate_canonical<double, 53>(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding left u above the final partial sum: take the last index with mass.
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return i;
  return probs.size() - 1;
}

TracedEpisode sample_episode_traced(nn::Tape& tape, const PolicyNetwork& policy, std::span<const double> features,
                                    std::size_t max_len, std::mt19937_64& rng) {
  if (max_len < 1) throw Error("sample_episode: max_len must be >= 1");
  TracedEpisode ep;
  nn::Var ctx = policy.encode_context(tape, features);
  PolicyNetwork::State s = policy.initial_state(tape), next;
  TokenId prev = core::kStart;
  std::vector<double> probs;
  while (ep.actions.size() < max_len) {
    nn::Var logp = policy.step(tape, prev, s, ctx, next);
    s = std::move(next);
    probs.resize(logp.size());
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(logp[i]);
    const auto a = static_cast<TokenId>(sample_index(probs, rng));
    ep.actions.push_back(a);
    ep.log_probs.push_back(nn::pick(logp, a));
    if (a == core::kEnd) break;
    prev = a;
  }
  return ep;
}

Trajectory sample_episode(const PolicyNetwork& policy, std::span<const double> features, std::size_t max_len,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  nn::Tape tape;
  TracedEpisode ep = sample_episode_traced(tape, policy, features, max_len, rng);
  Trajectory t;
  t.context.assign(features.begin(), features.end());
  t.actions = std::move(ep.actions);
  for (nn::Var v : ep.log_probs) t.log_probs.push_back(v.scalar());
  return t;
}

PolicyStepModel::PolicyStepModel(const PolicyNetwork& policy, std::span<const double> features) : policy_(policy) {
  context_ = policy_.encode_context(tape_, features);
  Entry root;
  root.log_probs = policy_.step(tape_, core::kStart, policy_.initial_state(tape_), context_, root.state);
  cache_.emplace(TokenSequence{}, std::move(root));
}

std::vector<double> PolicyStepModel::next_log_probs(const TokenSequence& prefix) {
  auto it = cache_.find(prefix);
  if (it == cache_.end()) {
    const TokenSequence head(prefix.begin(), prefix.end() - 1);
    auto parent = cache_.find(head);
    if (parent == cache_.end()) throw Error("PolicyStepModel: prefix expanded before its parent");
    Entry e;
    e.log_probs = policy_.step(tape_, prefix.back(), parent->second.state, context_, e.state);
    it = cache_.emplace(prefix, std::move(e)).first;
  }
  const auto v = it->second.log_probs.value();
  return {v.begin(), v.end()};
}

namespace {

// Strict ordering: better hypotheses first.
bool better(const BeamHypothesis& a, const BeamHypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  if (a.tokens != b.tokens)
    return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(), b.tokens.begin(), b.tokens.end());
  return a.tokens.size() < b.tokens.size();
}

}  // namespace

std::vector<BeamHypothesis> beam_search(StepModel& model, std::size_t beam_width, std::size_t max_len, TokenId end_token) {
  if (beam_width < 1) throw Error("beam_decode: beam width must be >= 1");
  if (max_len < 1) throw Error("beam_decode: max_len must be >= 1");
  std::vector<BeamHypothesis> beam{BeamHypothesis{}};
  for (std::size_t t = 0; t < max_len; ++t) {
    std::vector<BeamHypothesis> pool;
    for (const auto& h : beam) {
      if (h.finished) {
        pool.push_back(h);
        continue;
      }
      const auto logp = model.next_log_probs(h.tokens);
      for (std::size_t v = 0; v < logp.size(); ++v) {
        if (!std::isfinite(logp[v])) continue;
        BeamHypothesis c = h;
        c.tokens.push_back(static_cast<TokenId>(v));
        c.log_prob += logp[v];
        c.finished = v == end_token;
        pool.push_back(std::move(c));
      }
    }
    const std::size_t keep = std::min(beam_width, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(), better);
    pool.resize(keep);
    beam = std::move(pool);
    if (std::all_of(beam.begin(), beam.end(), [](const BeamHypothesis& h) { return h.finished; })) break;
  }
  std::sort(beam.begin(), beam.end(), better);
  return beam;
}

TokenSequence beam_decode(const PolicyNetwork& policy, std::span<const double> features, std::size_t beam_width,
                          std::size_t max_len) {
  PolicyStepModel model(policy, features);
  return beam_search(model, beam_width, max_len).front().tokens;
}

TokenSequence greedy_decode(StepModel& model, std::size_t max_len, TokenId end_token) {
  if (max_len < 1) throw Error("greedy_decode: max_len must be >= 1");
  TokenSequence out;
  while (out.size() < max_len) {
    const auto logp = model.next_log_probs(out);
    const auto best = static_cast<TokenId>(std::max_element(logp.begin(), logp.end()) - logp.begin());
    out.push_back(best);
    if (best == end_token) break;
  }
  return out;
}

TokenSequence greedy_decode(const PolicyNetwork& policy, std::span<const double> features, std::size_t max_len) {
  PolicyStepModel model(policy, features);
  return greedy_decode(model, max_len);
}

}  // namespace trl::agent

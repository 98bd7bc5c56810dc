#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "trl/agent/networks.hpp"

namespace trl::agent {

struct Trajectory {
  std::vector<double> context;
  TokenSequence actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> returns;
  std::vector<double> advantages;

  std::size_t length() const { return actions.size(); }
};

/// An episode sampled on a live tape, keeping the traced log-probabilities
/// of the chosen actions for the policy-gradient loss.
struct TracedEpisode {
  TokenSequence actions;
  std::vector<nn::Var> log_probs;
};

/// Index drawn from `probs` by inverse CDF with one uniform variate.
std::size_t sample_index(std::span<const double> probs, std::mt19937_64& rng);

/// Samples until the end marker is drawn (it is kept as the last action) or
/// `max_len` actions have been taken.
TracedEpisode sample_episode_traced(nn::Tape& tape, const PolicyNetwork& policy, std::span<const double> features,
                                    std::size_t max_len, std::mt19937_64& rng);
Trajectory sample_episode(const PolicyNetwork& policy, std::span<const double> features, std::size_t max_len,
                          std::uint64_t seed);

/// Anything that can score next tokens given a prefix; lets the search be
/// checked against hand-built toy distributions.
class StepModel {
 public:
  virtual ~StepModel() = default;
  virtual std::size_t vocab_size() const = 0;
  /// Log-probabilities of the next token after `prefix`.
  virtual std::vector<double> next_log_probs(const TokenSequence& prefix) = 0;
};

/// StepModel view of a policy for one context; recurrent states are cached
/// per prefix so each expansion costs one step.
class PolicyStepModel : public StepModel {
 public:
  PolicyStepModel(const PolicyNetwork& policy, std::span<const double> features);

  std::size_t vocab_size() const override { return policy_.config().vocab_size; }
  std::vector<double> next_log_probs(const TokenSequence& prefix) override;

 private:
  const PolicyNetwork& policy_;
  nn::Tape tape_;
  nn::Var context_;
  struct Entry {
    PolicyNetwork::State state;  // after feeding the start marker and the prefix
    nn::Var log_probs;
  };
  std::map<TokenSequence, Entry> cache_;
};

struct BeamHypothesis {
  TokenSequence tokens;
  double log_prob = 0.0;
  bool finished = false;
};

/// Length-completed beam search over summed log-probabilities. Hypotheses
/// that emit `end_token` are frozen; search stops when all B are frozen or
/// `max_len` is reached. Ties: higher score, then lexicographically smaller
/// token sequence, then shorter. Returns hypotheses best first.
std::vector<BeamHypothesis> beam_search(StepModel& model, std::size_t beam_width, std::size_t max_len,
                                        TokenId end_token = core::kEnd);

TokenSequence beam_decode(const PolicyNetwork& policy, std::span<const double> features, std::size_t beam_width,
                          std::size_t max_len);
/// Argmax at every step, lowest index on ties.
TokenSequence greedy_decode(const PolicyNetwork& policy, std::span<const double> features, std::size_t max_len);
TokenSequence greedy_decode(StepModel& model, std::size_t max_len, TokenId end_token = core::kEnd);

}  // namespace trl::agent

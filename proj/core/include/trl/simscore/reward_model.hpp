#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "trl/core/numeric.hpp"
#include "trl/simscore/encoder.hpp"

namespace trl::simscore {

enum class Granularity {
  terminal,     // full score at the last step, zeros elsewhere
  incremental,  // r_t = score(prefix_t) − score(prefix_{t−1})
};

std::string to_string(Granularity g);
Granularity granularity_from_string(const std::string& s);
std::string to_string(core::Aggregation a);
core::Aggregation aggregation_from_string(const std::string& s);

struct RewardModelConfig {
  EncoderConfig encoder;
  core::Aggregation aggregation = core::Aggregation::mean;
  Granularity granularity = Granularity::terminal;
};

/// Sentence encoder plus pair-scoring head, owning its parameters. Movable,
/// not copyable (layers point into the store).
class RewardModel {
 public:
  explicit RewardModel(const RewardModelConfig& cfg, std::uint64_t seed = 0);
  RewardModel(RewardModel&&) noexcept = default;
  RewardModel& operator=(RewardModel&&) noexcept = default;
  RewardModel(const RewardModel&) = delete;
  RewardModel& operator=(const RewardModel&) = delete;

  const RewardModelConfig& config() const { return cfg_; }
  void set_aggregation(core::Aggregation a) { cfg_.aggregation = a; }
  void set_granularity(Granularity g) { cfg_.granularity = g; }

  nn::ParameterStore& store() { return store_; }
  const nn::ParameterStore& store() const { return store_; }
  const SentenceEncoder& encoder() const { return encoder_; }
  const PairScorer& scorer() const { return scorer_; }

  void freeze() { store_.set_frozen(true); }
  bool frozen() const { return store_.frozen(); }

  std::vector<double> encode(std::span<const TokenId> tokens, const core::EmbeddingTable& emb) const {
    return encoder_.encode_values(tokens, emb);
  }
  double pair_score(std::span<const double> h1, std::span<const double> h2) const { return scorer_.score_values(h1, h2); }

 private:
  RewardModelConfig cfg_;
  nn::ParameterStore store_;
  SentenceEncoder encoder_;
  PairScorer scorer_;
};

using EncodedReferences = std::vector<std::vector<double>>;

/// Encodes each reference with markers stripped.
EncodedReferences encode_references(const RewardModel& model, const std::vector<TokenSequence>& references,
                                    const core::EmbeddingTable& emb);

/// Aggregated pair score of `candidate` (markers stripped) against the
/// references. Requires a frozen model; throws "empty content" when the
/// candidate has no tokens left.
double trl_reward(const RewardModel& model, std::span<const TokenId> candidate, const EncodedReferences& references,
                  const core::EmbeddingTable& emb);
double trl_reward(const RewardModel& model, std::span<const TokenId> candidate, const std::vector<TokenSequence>& references,
                  const core::EmbeddingTable& emb);

/// One reward per action of `actions`, laid out by the model's granularity.
/// Prefixes without content score 0. Scores are snapped to the reward grid
/// (core::quantize_reward) so the per-step rewards sum exactly to the final
/// prefix score.
std::vector<double> trl_step_rewards(const RewardModel& model, std::span<const TokenId> actions,
                                     const EncodedReferences& references, const core::EmbeddingTable& emb);

/// nn checkpoint at `path` plus a JSON sidecar at `path` + ".json".
void save_reward_model(const RewardModel& model, const std::filesystem::path& path);
RewardModel load_reward_model(const std::filesystem::path& path);

}  // namespace trl::simscore

#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "trl/core/synthetic.hpp"
#include "trl/harness/config.hpp"
#include "trl/metrics/ngram.hpp"
#include "trl/simscore/reward_model.hpp"

namespace trl::harness {

/// Everything a run reads but never modifies: splits, word vectors, the
/// lexicon, and (for trl rewards) the frozen reward model.
struct Experiment {
  core::Corpus train, val, test;
  core::EmbeddingTable embeddings;
  core::Lexicon lexicon;
  metrics::IdfTable train_idf;
  std::shared_ptr<const simscore::RewardModel> reward_model;

  const core::Vocabulary& vocabulary() const { return train.vocabulary; }
};

/// Deterministic synthetic corpus for `cfg` split 0.8/0.1/0.1 and synthetic
/// word vectors, both seeded by cfg.data_seed.
Experiment make_experiment(const TrainConfig& cfg);

/// Reads corpus.jsonl, vocab.txt, embeddings.txt and lexicon.tsv from `dir`
/// (as written by `gen-data`).
Experiment load_experiment(const std::filesystem::path& dir, const TrainConfig& cfg);

/// Writes the files read by load_experiment from a whole corpus.
void write_dataset(const core::SyntheticData& data, const core::EmbeddingTable& emb, const std::filesystem::path& dir);

/// Generates the synthetic corpus of make_experiment (unsplit) and writes it.
void write_synthetic_dataset(const TrainConfig& cfg, const std::filesystem::path& dir);

/// Trains the transfer reward learner on pairs drawn from the train split.
std::shared_ptr<const simscore::RewardModel> train_reward_model(const Experiment& ex, const TrainConfig& cfg);

/// Adds the reward model when cfg.reward is trl and none is present.
void ensure_reward_model(Experiment& ex, const TrainConfig& cfg);

/// Per-action rewards for one episode of one scene.
class RewardFunction {
 public:
  virtual ~RewardFunction() = default;
  virtual std::vector<double> step_rewards(const core::Scene& scene, std::span<const core::TokenId> actions) const = 0;
};

/// Score-once rewards: the score of the whole caption at the last action,
/// zero elsewhere; 0 when the caption has no content.
class TerminalReward : public RewardFunction {
 public:
  std::vector<double> step_rewards(const core::Scene& scene, std::span<const core::TokenId> actions) const final;
  virtual double score(const core::Scene& scene, std::span<const core::TokenId> content) const = 0;
};

class ConstantReward final : public TerminalReward {
 public:
  explicit ConstantReward(double c) : c_(c) {}
  double score(const core::Scene&, std::span<const core::TokenId>) const override { return c_; }

 private:
  double c_;
};

/// Reward for `cfg.reward` (not ml). N-gram rewards use smoothed sentence
/// BLEU-4, ROUGE-L, or CIDEr / 10 with train-split idf.
std::unique_ptr<RewardFunction> make_reward(const Experiment& ex, const TrainConfig& cfg);

}  // namespace trl::harness

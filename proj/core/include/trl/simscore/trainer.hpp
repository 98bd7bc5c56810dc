#pragma once

#include <cstdint>
#include <vector>

#include "trl/core/synthetic.hpp"
#include "trl/simscore/reward_model.hpp"

namespace trl::simscore {

struct ScorerPair {
  TokenSequence a;
  TokenSequence b;
  double label = 0.0;  // similarity in [0, 1]
};

/// Concept-level overlap of two token sequences: 0.5 · F1 over content
/// concepts (objects, attributes) + 0.5 · F1 over all concepts, both as
/// multisets. Synonyms share a concept, so paraphrases score high while
/// swapped objects or attributes score low.
double concept_similarity(std::span<const TokenId> a, std::span<const TokenId> b, const core::Vocabulary& vocab,
                          const core::Lexicon& lexicon);

/// Labelled pairs drawn from a corpus: paraphrases (two references of one
/// scene), unrelated pairs (different scenes) and perturbations of a
/// reference (object/attribute swaps, synonym swaps, drops, truncations,
/// repeats). Labels come from concept_similarity.
std::vector<ScorerPair> make_similarity_pairs(const core::Corpus& corpus, const core::Lexicon& lexicon, std::size_t count,
                                              std::uint64_t seed);

struct ScorerTrainConfig {
  RewardModelConfig model;
  std::size_t epochs = 30;
  std::size_t batch = 16;
  double lr = 2e-3;
  std::uint64_t seed = 0;
  // Start the scoring head at W = 0, b = 0 (score 0.5 everywhere).
  bool zero_head_init = false;
};

struct ScorerTrainResult {
  RewardModel model;
  std::vector<double> curve;  // mean training loss per epoch
  double initial_mse = 0.0;
  double final_mse = 0.0;
  bool degenerate_labels = false;
};

double mean_squared_error(const RewardModel& model, const std::vector<ScorerPair>& pairs, const core::EmbeddingTable& emb);

/// Minimizes the mean squared error between pair scores and labels with
/// Adam over shuffled mini-batches. The returned model is frozen.
ScorerTrainResult train_scorer(const std::vector<ScorerPair>& pairs, const core::EmbeddingTable& emb,
                               const ScorerTrainConfig& cfg);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace trl::simscore

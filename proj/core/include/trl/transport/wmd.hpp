#pragma once

#include <span>
#include <vector>

#include "trl/core/embeddings.hpp"
#include "trl/core/numeric.hpp"
#include "trl/core/vocabulary.hpp"
#include "trl/metrics/overlap.hpp"
#include "trl/transport/emd.hpp"

namespace trl::transport {

using core::TokenId;
using core::TokenSequence;

/// Normalized bag of words over non-marker tokens, support sorted by id.
/// Throws "empty content" when nothing remains.
Histogram nbow(std::span<const TokenId> tokens);

CostMatrix embedding_costs(const Histogram& a, const Histogram& b, const core::EmbeddingTable& emb);

/// Word mover's distance with Euclidean ground costs; `emb` must be normalized.
double wmd(std::span<const TokenId> x, std::span<const TokenId> y, const core::EmbeddingTable& emb);

enum class WmdSimilarity {
  exp_neg,  // exp(-d)
  inverse,  // 1 / (1 + d)
};

struct WmdRewardOptions {
  WmdSimilarity similarity = WmdSimilarity::exp_neg;
  core::Aggregation aggregation = core::Aggregation::mean;
  metrics::BrevityMode brevity = metrics::BrevityMode::standard;
};

double wmd_similarity(double distance, WmdSimilarity kind);

/// sigmoid(BP * similarity(wmd)), BP over non-marker lengths.
double wmd_reward(std::span<const TokenId> candidate, std::span<const TokenId> reference, const core::EmbeddingTable& emb,
                  const WmdRewardOptions& opts = {});
double wmd_reward(std::span<const TokenId> candidate, const std::vector<TokenSequence>& references,
                  const core::EmbeddingTable& emb, const WmdRewardOptions& opts = {});

}  // namespace trl::transport

#pragma once

#include <span>
#include <vector>

#include "trl/core/embeddings.hpp"
#include "trl/core/numeric.hpp"
#include "trl/metrics/overlap.hpp"

namespace trl::simscore {

struct KernelCosineOptions {
  std::size_t window = 2;
  metrics::BrevityMode brevity = metrics::BrevityMode::standard;
  core::Aggregation aggregation = core::Aggregation::mean;
};

/// Sliding-window embedding cosine with exp(−|i − j|) positional decay:
///   σ((k / T_ref) · BP · Σ_i Σ_{|i−j| <= k} exp(−|i − j|) cos(e_ref_i, e_cand_j))
/// with j clamped to the candidate. Markers are stripped first.
double kernel_cosine(std::span<const core::TokenId> candidate, std::span<const core::TokenId> reference,
                     const core::EmbeddingTable& emb, std::size_t window,
                     metrics::BrevityMode brevity = metrics::BrevityMode::standard);
double kernel_cosine(std::span<const core::TokenId> candidate, const std::vector<core::TokenSequence>& references,
                     const core::EmbeddingTable& emb, const KernelCosineOptions& opts = {});

}  // namespace trl::simscore

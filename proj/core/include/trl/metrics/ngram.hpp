#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "trl/core/corpus.hpp"
#include "trl/core/vocabulary.hpp"

namespace trl::metrics {

using core::TokenId;
using core::TokenSequence;
using NGram = std::vector<TokenId>;

/// Counts of every n-gram (1 <= n <= max_n) in one sequence.
class NGramProfile {
 public:
  NGramProfile() = default;
  NGramProfile(std::span<const TokenId> tokens, std::size_t max_n);

  std::size_t count(const NGram& g) const;
  const std::map<NGram, std::size_t>& counts() const& { return counts_; }
  const std::map<NGram, std::size_t>& counts() const&& = delete;

 private:
  std::map<NGram, std::size_t> counts_;
};

/// Document frequencies over reference sets (one document per scene);
/// weight(g) = ln(N_docs / max(1, df(g))).
class IdfTable {
 public:
  IdfTable() = default;
  static IdfTable build(const std::vector<std::vector<TokenSequence>>& reference_sets, std::size_t max_n = 4);
  static IdfTable build(const core::Corpus& corpus, std::size_t max_n = 4);

  double weight(const NGram& g) const;
  std::size_t num_docs() const { return n_docs_; }

  /// Every weight multiplied by `factor` (> 0).
  IdfTable scaled(double factor) const;

 private:
  std::map<NGram, std::size_t> df_;
  std::size_t n_docs_ = 0;
  double scale_ = 1.0;
};

}  // namespace trl::metrics

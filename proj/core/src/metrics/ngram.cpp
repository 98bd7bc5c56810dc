#include "trl/metrics/ngram.hpp"

#include <cmath>
#include <set>

#include "trl/error.hpp"

namespace trl::metrics {

NGramProfile::NGramProfile(std::span<const TokenId> tokens, std::size_t max_n) {
  for (std::size_t n = 1; n <= max_n; ++n)
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts_[NGram(tokens.begin() + i, tokens.begin() + i + n)];
}

std::size_t NGramProfile::count(const NGram& g) const {
  auto it = counts_.find(g);
  return it == counts_.end() ? 0 : it->second;
}

IdfTable IdfTable::build(const std::vector<std::vector<TokenSequence>>& reference_sets, std::size_t max_n) {
  IdfTable t;
  t.n_docs_ = reference_sets.size();
  for (const auto& refs : reference_sets) {
    std::set<NGram> seen;
    for (const auto& r : refs) {
      const NGramProfile profile(r, max_n);
      for (const auto& [g, c] : profile.counts()) seen.insert(g);
    }
    for (const auto& g : seen) ++t.df_[g];
  }
  return t;
}

IdfTable IdfTable::build(const core::Corpus& corpus, std::size_t max_n) {
  std::vector<std::vector<TokenSequence>> sets;
  sets.reserve(corpus.scenes.size());
  for (const auto& s : corpus.scenes) {
    std::vector<TokenSequence> refs;
    for (const auto& r : s.references) refs.push_back(core::strip_markers(r));
    sets.push_back(std::move(refs));
  }
  return build(sets, max_n);
}

double IdfTable::weight(const NGram& g) const {
  if (n_docs_ == 0) return 0.0;
  auto it = df_.find(g);
  const double df = it == df_.end() ? 1.0 : static_cast<double>(it->second);
  return scale_ * std::log(static_cast<double>(n_docs_) / std::max(1.0, df));
}

IdfTable IdfTable::scaled(double factor) const {
  if (!(factor > 0.0)) throw Error("idf scale factor must be positive");
  IdfTable t = *this;
  t.scale_ *= factor;
  return t;
}

}  // namespace trl::metrics

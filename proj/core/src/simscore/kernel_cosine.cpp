#include "trl/simscore/kernel_cosine.hpp"

#include <algorithm>
#include <cmath>

#include "trl/error.hpp"

namespace trl::simscore {

double kernel_cosine(std::span<const core::TokenId> candidate, std::span<const core::TokenId> reference,
                     const core::EmbeddingTable& emb, std::size_t window, metrics::BrevityMode brevity) {
  if (window < 1) throw Error("kernel_cosine: window must be >= 1");
  const auto cand = core::strip_markers(candidate);
  const auto ref = core::strip_markers(reference);
  if (cand.empty() || ref.empty()) throw Error("kernel_cosine: empty content");
  for (auto t : cand)
    if (t >= emb.rows()) throw Error("kernel_cosine: token outside embedding table");
  for (auto t : ref)
    if (t >= emb.rows()) throw Error("kernel_cosine: token outside embedding table");

  const std::size_t Tr = ref.size(), Tc = cand.size();
  const std::size_t k = window;
  double total = 0.0;
  for (std::size_t i = 0; i < Tr; ++i) {
    const std::size_t lo = i >= k ? i - k : 0;
    const std::size_t hi = std::min(Tc - 1, i + k);
    for (std::size_t j = lo; j <= hi; ++j) {
      const double dist = static_cast<double>(i > j ? i - j : j - i);
      total += std::exp(-dist) * core::cosine_similarity(emb.row(ref[i]), emb.row(cand[j]));
    }
  }
  const double bp = metrics::brevity_penalty(Tc, Tr, brevity);
  return core::sigmoid(static_cast<double>(k) / static_cast<double>(Tr) * bp * total);
}

double kernel_cosine(std::span<const core::TokenId> candidate, const std::vector<core::TokenSequence>& references,
                     const core::EmbeddingTable& emb, const KernelCosineOptions& opts) {
  if (references.empty()) throw Error("kernel_cosine: empty reference list");
  std::vector<double> s;
  s.reserve(references.size());
  for (const auto& r : references) s.push_back(kernel_cosine(candidate, r, emb, opts.window, opts.brevity));
  return core::aggregate(s, opts.aggregation);
}

}  // namespace trl::simscore

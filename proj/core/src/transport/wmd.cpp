#include "trl/transport/wmd.hpp"

#include <map>

#include "trl/error.hpp"

namespace trl::transport {

Histogram nbow(std::span<const TokenId> tokens) {
  std::map<TokenId, std::size_t> counts;
  std::size_t total = 0;
  for (TokenId t : tokens) {
    if (core::is_marker(t)) continue;
    ++counts[t];
    ++total;
  }
  if (total == 0) throw Error("empty content");
  Histogram h;
  for (auto [t, c] : counts) {
    h.support.push_back(t);
    h.weights.push_back(static_cast<double>(c) / static_cast<double>(total));
  }
  return h;
}

CostMatrix embedding_costs(const Histogram& a, const Histogram& b, const core::EmbeddingTable& emb) {
  std::vector<double> c;
  c.reserve(a.support.size() * b.support.size());
  for (std::size_t i : a.support) {
    if (i >= emb.rows()) throw Error("wmd: token " + std::to_string(i) + " outside embedding table");
    for (std::size_t j : b.support) {
      if (j >= emb.rows()) throw Error("wmd: token " + std::to_string(j) + " outside embedding table");
      c.push_back(core::euclidean_distance(emb.row(i), emb.row(j)));
    }
  }
  return CostMatrix(a.support.size(), b.support.size(), std::move(c));
}

double wmd(std::span<const TokenId> x, std::span<const TokenId> y, const core::EmbeddingTable& emb) {
  if (!emb.normalized()) throw Error("wmd: embedding table must be normalized");
  const Histogram hx = nbow(x), hy = nbow(y);
  return emd(hx, hy, embedding_costs(hx, hy, emb)).distance;
}

double wmd_similarity(double distance, WmdSimilarity kind) {
  return kind == WmdSimilarity::exp_neg ? std::exp(-distance) : 1.0 / (1.0 + distance);
}

namespace {

std::size_t content_length(std::span<const TokenId> s) {
  std::size_t n = 0;
  for (TokenId t : s) n += core::is_marker(t) ? 0 : 1;
  return n;
}

}  // namespace

double wmd_reward(std::span<const TokenId> candidate, std::span<const TokenId> reference, const core::EmbeddingTable& emb,
                  const WmdRewardOptions& opts) {
  const double d = wmd(candidate, reference, emb);
  const double bp = metrics::brevity_penalty(content_length(candidate), content_length(reference), opts.brevity);
  return core::sigmoid(bp * wmd_similarity(d, opts.similarity));
}

double wmd_reward(std::span<const TokenId> candidate, const std::vector<TokenSequence>& references,
                  const core::EmbeddingTable& emb, const WmdRewardOptions& opts) {
  if (references.empty()) throw Error("wmd_reward: empty reference list");
  std::vector<double> s;
  s.reserve(references.size());
  for (const auto& r : references) s.push_back(wmd_reward(candidate, r, emb, opts));
  return core::aggregate(s, opts.aggregation);
}

}  // namespace trl::transport

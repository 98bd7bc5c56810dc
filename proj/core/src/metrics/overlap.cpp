#include "trl/metrics/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "trl/error.hpp"

namespace trl::metrics {

double brevity_penalty(std::size_t cand_len, std::size_t ref_len, BrevityMode mode) {
  if (cand_len == 0 || ref_len == 0) throw Error("brevity_penalty: lengths must be >= 1");
  const double c = static_cast<double>(cand_len);
  const double r = static_cast<double>(ref_len);
  const double ratio = mode == BrevityMode::standard ? r / c : c / r;
  return std::min(std::exp(1.0 - ratio), 1.0);
}

namespace {

struct BleuCounts {
  std::array<std::size_t, 4> matched{};
  std::array<std::size_t, 4> total{};
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
};

std::size_t closest_ref_length(std::size_t cand_len, const std::vector<TokenSequence>& refs) {
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto d = [&](std::size_t len) { return len > cand_len ? len - cand_len : cand_len - len; };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  return best;
}

BleuCounts bleu_counts(std::span<const TokenId> cand, const std::vector<TokenSequence>& refs, std::size_t max_n) {
  if (refs.empty()) throw Error("bleu: empty reference list");
  if (max_n < 1 || max_n > 4) throw Error("bleu: max_n must be in 1..4");
  BleuCounts c;
  c.cand_len = cand.size();
  c.ref_len = closest_ref_length(cand.size(), refs);
  const NGramProfile cp(cand, max_n);
  std::vector<NGramProfile> rps;
  rps.reserve(refs.size());
  for (const auto& r : refs) rps.emplace_back(r, max_n);
  for (const auto& [g, count] : cp.counts()) {
    std::size_t max_ref = 0;
    for (const auto& rp : rps) max_ref = std::max(max_ref, rp.count(g));
    c.matched[g.size() - 1] += std::min(count, max_ref);
  }
  for (std::size_t n = 1; n <= max_n; ++n) c.total[n - 1] = cand.size() >= n ? cand.size() - n + 1 : 0;
  return c;
}

double combine(const BleuCounts& c, std::size_t max_n, bool smoothing) {
  if (c.cand_len == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    double num = static_cast<double>(c.matched[n - 1]);
    double den = static_cast<double>(c.total[n - 1]);
    if (smoothing && n >= 2) {
      num += 1.0;
      den += 1.0;
    }
    if (num == 0.0 || den == 0.0) return 0.0;
    log_sum += std::log(num / den);
  }
  return brevity_penalty(c.cand_len, c.ref_len) * std::exp(log_sum / static_cast<double>(max_n));
}

}  // namespace

double bleu(std::span<const TokenId> candidate, const std::vector<TokenSequence>& references, BleuOptions opts) {
  if (candidate.empty()) throw Error("bleu: empty candidate");
  return combine(bleu_counts(candidate, references, opts.max_n), opts.max_n, opts.smoothing);
}

double corpus_bleu(const std::vector<TokenSequence>& candidates, const std::vector<std::vector<TokenSequence>>& references,
                   std::size_t max_n) {
  if (candidates.size() != references.size()) throw Error("corpus_bleu: misaligned candidate/reference lists");
  BleuCounts total;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto c = bleu_counts(candidates[i], references[i], max_n);
    for (std::size_t n = 0; n < 4; ++n) {
      total.matched[n] += c.matched[n];
      total.total[n] += c.total[n];
    }
    total.cand_len += c.cand_len;
    total.ref_len += c.ref_len;
  }
  if (total.ref_len == 0) return 0.0;
  return combine(total, max_n, false);
}

std::size_t lcs_length(std::span<const TokenId> a, std::span<const TokenId> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l_detail(std::span<const TokenId> candidate, std::span<const TokenId> reference) {
  if (candidate.empty() || reference.empty()) throw Error("rouge_l: empty sequence");
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  RougeScore s;
  if (lcs == 0.0) return s;
  s.precision = lcs / static_cast<double>(candidate.size());
  s.recall = lcs / static_cast<double>(reference.size());
  s.f = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

double rouge_l(std::span<const TokenId> candidate, std::span<const TokenId> reference) {
  return rouge_l_detail(candidate, reference).f;
}

double rouge_l(std::span<const TokenId> candidate, const std::vector<TokenSequence>& references) {
  if (references.empty()) throw Error("rouge_l: empty reference list");
  double best = 0.0;
  for (const auto& r : references) best = std::max(best, rouge_l(candidate, r));
  return best;
}

namespace {

using TfIdf = std::map<NGram, double>;

std::array<TfIdf, 4> tfidf_vectors(std::span<const TokenId> tokens, const IdfTable& idf) {
  std::array<TfIdf, 4> vecs;
  const NGramProfile profile(tokens, 4);
  for (const auto& [g, c] : profile.counts())
    vecs[g.size() - 1][g] = static_cast<double>(c) * idf.weight(g);
  return vecs;
}

double cosine(const TfIdf& a, const TfIdf& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [g, w] : a) {
    na += w * w;
    if (auto it = b.find(g); it != b.end()) dot += w * it->second;
  }
  for (const auto& [g, w] : b) nb += w * w;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double cider_sentence(std::span<const TokenId> candidate, const std::vector<TokenSequence>& references, const IdfTable& idf) {
  if (references.empty()) throw Error("cider: empty reference list");
  const auto cv = tfidf_vectors(candidate, idf);
  std::array<double, 4> per_n{};
  for (const auto& r : references) {
    const auto rv = tfidf_vectors(r, idf);
    for (std::size_t n = 0; n < 4; ++n) per_n[n] += cosine(cv[n], rv[n]);
  }
  double s = 0.0;
  for (double v : per_n) s += v / static_cast<double>(references.size());
  return 10.0 * s / 4.0;
}

CiderResult cider(const std::vector<TokenSequence>& candidates, const std::vector<std::vector<TokenSequence>>& reference_sets,
                  const IdfTable& idf) {
  if (candidates.size() != reference_sets.size()) throw Error("cider: misaligned candidate/reference lists");
  CiderResult r;
  r.per_sentence.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) r.per_sentence.push_back(cider_sentence(candidates[i], reference_sets[i], idf));
  double s = 0.0;
  for (double v : r.per_sentence) s += v;
  r.corpus_mean = candidates.empty() ? 0.0 : s / static_cast<double>(candidates.size());
  return r;
}

}  // namespace trl::metrics

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "oracles.hpp"
#include "trl/error.hpp"
#include "trl/metrics/ngram.hpp"
#include "trl/metrics/overlap.hpp"

using namespace trl;
using namespace trl::metrics;

namespace {

// Hand-readable sentences over the toy alphabet the=10, cat=11, sat=12, a=13, b/c/d=14..16.
using S = TokenSequence;
constexpr TokenId the = 10, cat = 11, sat = 12, a = 13, b = 14, c = 15, d = 16;

TokenSequence random_sentence(std::mt19937_64& rng, std::size_t max_len, TokenId alphabet) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<TokenId> tok(10, 10 + alphabet - 1);
  TokenSequence s(len(rng));
  for (auto& t : s) t = tok(rng);
  return s;
}

// Independent sentence BLEU: n-gram maps rebuilt by hand, clipped against
// the max count over references.
double bleu_oracle(const TokenSequence& cand, const std::vector<TokenSequence>& refs, std::size_t max_n) {
  auto grams = [](const TokenSequence& s, std::size_t n) {
    std::map<TokenSequence, int> m;
    for (std::size_t i = 0; i + n <= s.size(); ++i) ++m[TokenSequence(s.begin() + i, s.begin() + i + n)];
    return m;
  };
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto cg = grams(cand, n);
    int match = 0, total = 0;
    for (const auto& [g, k] : cg) {
      int best = 0;
      for (const auto& r : refs) {
        const auto rg = grams(r, n);
        auto it = rg.find(g);
        if (it != rg.end()) best = std::max(best, it->second);
      }
      match += std::min(k, best);
      total += k;
    }
    if (match == 0) return 0.0;
    log_sum += std::log(static_cast<double>(match) / total);
  }
  std::size_t best_len = refs[0].size();
  for (const auto& r : refs) {
    const auto dr = std::abs(static_cast<long>(r.size()) - static_cast<long>(cand.size()));
    const auto db = std::abs(static_cast<long>(best_len) - static_cast<long>(cand.size()));
    if (dr < db || (dr == db && r.size() < best_len)) best_len = r.size();
  }
  const double bp = cand.size() >= best_len ? 1.0 : std::exp(1.0 - static_cast<double>(best_len) / cand.size());
  return bp * std::exp(log_sum / max_n);
}

// LCS by enumerating every subsequence of the shorter sequence.
std::size_t lcs_oracle(const TokenSequence& x, const TokenSequence& y) {
  const auto& s = x.size() <= y.size() ? x : y;
  const auto& l = x.size() <= y.size() ? y : x;
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << s.size()); ++mask) {
    TokenSequence sub;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (mask & (1u << i)) sub.push_back(s[i]);
    std::size_t j = 0;
    for (std::size_t i = 0; i < l.size() && j < sub.size(); ++i)
      if (l[i] == sub[j]) ++j;
    if (j == sub.size()) best = std::max(best, sub.size());
  }
  return best;
}

}  // namespace

TEST(BrevityPenalty, Cases) {
  EXPECT_EQ(brevity_penalty(4, 4, BrevityMode::standard), 1.0);
  EXPECT_EQ(brevity_penalty(4, 4, BrevityMode::inverted), 1.0);
  EXPECT_NEAR(brevity_penalty(2, 4, BrevityMode::standard), std::exp(-1.0), 1e-15);
  EXPECT_EQ(brevity_penalty(2, 4, BrevityMode::inverted), 1.0);
  EXPECT_NEAR(brevity_penalty(8, 4, BrevityMode::inverted), std::exp(-1.0), 1e-15);
  EXPECT_EQ(brevity_penalty(8, 4, BrevityMode::standard), 1.0);
  EXPECT_THROW(brevity_penalty(0, 4), Error);
}

TEST(Bleu, IdentityIsOne) {
  const TokenSequence s{the, cat, sat, a, b};
  for (std::size_t n = 1; n <= 4; ++n) EXPECT_DOUBLE_EQ(bleu(s, {s}, {n}), 1.0);
}

TEST(Bleu, ClippedUnigramPrecision) {
  EXPECT_DOUBLE_EQ(bleu(S{the, the, the, the}, {{the, cat}}, {1}), 0.25);
}

TEST(Bleu, BrevityPenaltyAgainstLongReference) {
  EXPECT_NEAR(bleu(S{a, b}, {{a, b, c, d}}, {1}), std::exp(-1.0), 1e-12);
}

TEST(Bleu, ZeroPrecisionGivesZeroUnlessSmoothed) {
  const TokenSequence cand{the, cat, a, sat};
  const std::vector<TokenSequence> refs{{the, sat, cat, a}};
  EXPECT_EQ(bleu(cand, refs, {4}), 0.0);
  EXPECT_GT(bleu(cand, refs, {4, true}), 0.0);
}

TEST(Bleu, EmptyInputsAreErrors) {
  EXPECT_THROW(bleu(S{the}, {}, {}), Error);
  EXPECT_THROW(bleu(S{}, {{the}}, {}), Error);
}

TEST(Bleu, MatchesOracleOnRandomSentences) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto cand = random_sentence(rng, 9, 4);
    std::vector<TokenSequence> refs;
    for (int r = 0; r < 1 + trial % 4; ++r) refs.push_back(random_sentence(rng, 9, 4));
    for (std::size_t n = 1; n <= 4; ++n) EXPECT_NEAR(bleu(cand, refs, {n}), bleu_oracle(cand, refs, n), 1e-12);
  }
}

TEST(CorpusBleu, SumsCountsBeforeDividing) {
  // Sentence 1 matches perfectly; sentence 2 shares one of two unigrams.
  const std::vector<TokenSequence> cands{{the, cat}, {a, b}};
  const std::vector<std::vector<TokenSequence>> refs{{{the, cat}}, {{a, c}}};
  EXPECT_DOUBLE_EQ(corpus_bleu(cands, refs, 1), 3.0 / 4.0);
  const std::vector<TokenSequence> one{S{the, cat, sat, a}};
  const std::vector<std::vector<TokenSequence>> one_ref{{S{the, cat, sat, a}}};
  EXPECT_DOUBLE_EQ(corpus_bleu(one, one_ref, 4), 1.0);
  EXPECT_THROW(corpus_bleu(cands, {{{the}}}, 1), Error);
}

TEST(RougeL, Cases) {
  const TokenSequence s{the, cat, sat};
  EXPECT_DOUBLE_EQ(rouge_l(s, s), 1.0);
  const auto r = rouge_l_detail(S{the, cat}, s);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_NEAR(r.recall, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.f, 0.8, 1e-12);
  EXPECT_EQ(rouge_l(S{a, b}, S{c, d}), 0.0);
  EXPECT_NEAR(rouge_l(S{the, cat}, std::vector<TokenSequence>{{c, d}, s}), 0.8, 1e-12);
  EXPECT_THROW(rouge_l_detail(S{}, s), Error);
}

TEST(RougeL, LcsMatchesEnumeration) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const auto x = random_sentence(rng, 10, 3), y = random_sentence(rng, 10, 3);
    EXPECT_EQ(lcs_length(x, y), lcs_oracle(x, y));
  }
}

TEST(Cider, IdentityScoresTen) {
  // Every n-gram of the candidate is absent from the second document, so
  // each idf weight is ln 2 > 0.
  const std::vector<TokenSequence> cands{{the, cat, sat, a}};
  const std::vector<std::vector<TokenSequence>> refs{{{the, cat, sat, a}}, {{b, c, d}}};
  const auto idf = IdfTable::build(refs);
  EXPECT_NEAR(cider_sentence(cands[0], refs[0], idf), 10.0, 1e-12);
}

TEST(Cider, DisjointScoresZero) {
  const std::vector<std::vector<TokenSequence>> refs{{{the, cat, sat}}, {{a, b}}};
  const auto idf = IdfTable::build(refs);
  EXPECT_EQ(cider_sentence(S{c, d}, refs[0], idf), 0.0);
}

TEST(Cider, IdfScaleInvariance) {
  std::mt19937_64 rng(13);
  std::vector<std::vector<TokenSequence>> refs;
  std::vector<TokenSequence> cands;
  for (int i = 0; i < 20; ++i) {
    refs.push_back({random_sentence(rng, 8, 6), random_sentence(rng, 8, 6)});
    cands.push_back(random_sentence(rng, 8, 6));
  }
  const auto idf = IdfTable::build(refs);
  const auto base = cider(cands, refs, idf);
  const auto doubled = cider(cands, refs, idf.scaled(2.0));
  ASSERT_EQ(base.per_sentence.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(base.per_sentence[i], doubled.per_sentence[i], 1e-12);
  double mean = 0.0;
  for (double s : base.per_sentence) mean += s / 20.0;
  EXPECT_NEAR(base.corpus_mean, mean, 1e-12);
  EXPECT_THROW(cider(cands, {refs[0]}, idf), Error);
  EXPECT_THROW(idf.scaled(0.0), Error);
}

TEST(Idf, DocumentFrequencies) {
  const std::vector<std::vector<TokenSequence>> refs{{{the, cat}, {the}}, {{the, a}}, {{b}}};
  const auto idf = IdfTable::build(refs);
  EXPECT_EQ(idf.num_docs(), 3u);
  EXPECT_NEAR(idf.weight({the}), std::log(3.0 / 2.0), 1e-15);  // counted once per document
  EXPECT_NEAR(idf.weight({cat}), std::log(3.0), 1e-15);
  EXPECT_NEAR(idf.weight({d}), std::log(3.0), 1e-15);  // unseen
  EXPECT_NEAR(idf.weight({the, cat}), std::log(3.0), 1e-15);
}

TEST(NGramProfile, Counts) {
  NGramProfile p(S{the, the, cat}, 2);
  EXPECT_EQ(p.count({the}), 2u);
  EXPECT_EQ(p.count({the, the}), 1u);
  EXPECT_EQ(p.count({the, cat}), 1u);
  EXPECT_EQ(p.count({cat, the}), 0u);
  EXPECT_EQ(p.counts().size(), 4u);
}

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "trl/metrics/ngram.hpp"

namespace trl::metrics {

enum class BrevityMode {
  standard,       // min(exp(1 − ref/cand), 1): penalizes short candidates
  inverted,       // min(exp(1 − cand/ref), 1): ratio flipped, penalizes long candidates
};

double brevity_penalty(std::size_t cand_len, std::size_t ref_len, BrevityMode mode = BrevityMode::standard);

struct BleuOptions {
  std::size_t max_n = 4;
  // Add-one smoothing of the n >= 2 precisions, for sentence-level rewards.
  bool smoothing = false;
};

/// Sentence BLEU: clipped n-gram precisions, geometric mean, standard
/// brevity penalty against the closest reference length (ties -> shorter).
double bleu(std::span<const TokenId> candidate, const std::vector<TokenSequence>& references, BleuOptions opts = {});

/// Corpus BLEU (unsmoothed): clipped counts, totals and lengths summed over
/// the corpus before taking precisions.
double corpus_bleu(const std::vector<TokenSequence>& candidates,
                   const std::vector<std::vector<TokenSequence>>& references, std::size_t max_n = 4);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

std::size_t lcs_length(std::span<const TokenId> a, std::span<const TokenId> b);

/// LCS-based ROUGE-L with beta = 1 (harmonic mean of P and R).
RougeScore rouge_l_detail(std::span<const TokenId> candidate, std::span<const TokenId> reference);
double rouge_l(std::span<const TokenId> candidate, std::span<const TokenId> reference);
/// Maximum F over references.
double rouge_l(std::span<const TokenId> candidate, const std::vector<TokenSequence>& references);

struct CiderResult {
  double corpus_mean = 0.0;
  std::vector<double> per_sentence;
};

/// Plain CIDEr (no length penalty): for n = 1..4 the tf-idf cosine between
/// candidate and each reference, averaged over references; sentence score is
/// 10 * mean over n.
CiderResult cider(const std::vector<TokenSequence>& candidates, const std::vector<std::vector<TokenSequence>>& reference_sets,
                  const IdfTable& idf);
double cider_sentence(std::span<const TokenId> candidate, const std::vector<TokenSequence>& references, const IdfTable& idf);

}  // namespace trl::metrics

#pragma once

#include <string>
#include <vector>

#include "trl/agent/networks.hpp"
#include "trl/harness/config.hpp"
#include "trl/harness/experiment.hpp"

namespace trl::harness {

struct MetricValue {
  std::string name;
  double value = 0.0;  // corpus score x 100, rounded to 2 decimals
};
using MetricTable = std::vector<MetricValue>;

/// Column names in table order: rouge_l, bleu1..bleu4, cider, wmd, cos.
const std::vector<std::string>& known_metrics();
/// Comma-separated list; "all" expands to known_metrics(). Unknown names throw.
std::vector<std::string> parse_metric_list(const std::string& csv);

struct EvalOptions {
  std::size_t beam = 5;
  std::size_t max_len = 16;
  std::size_t workers = 1;
  core::Aggregation aggregation = core::Aggregation::mean;
  std::size_t kernel_window = 2;
  transport::WmdSimilarity wmd_similarity = transport::WmdSimilarity::exp_neg;
};

EvalOptions eval_options(const TrainConfig& cfg);

/// Beam-decodes every scene (fanned out over `workers` threads; output order
/// is scene order) and strips markers.
std::vector<core::TokenSequence> decode_corpus(const agent::PolicyNetwork& policy, const core::Corpus& corpus,
                                               const EvalOptions& opts);

/// Scores candidates against aligned reference sets. BLEU-n is corpus BLEU,
/// ROUGE-L is the mean of per-sentence multi-reference maxima, CIDEr uses idf
/// from these reference sets, WMD and COS are the mean aggregated
/// wmd_reward and kernel_cosine. Empty candidates score 0 on per-sentence
/// metrics. `emb` is required only for wmd and cos.
MetricTable score_candidates(const std::vector<core::TokenSequence>& candidates,
                             const std::vector<std::vector<core::TokenSequence>>& references,
                             const std::vector<std::string>& metrics, const core::EmbeddingTable* emb,
                             const EvalOptions& opts);

/// decode_corpus + score_candidates. An empty metric list decodes nothing.
MetricTable evaluate(const agent::PolicyNetwork& policy, const core::Corpus& corpus, const std::vector<std::string>& metrics,
                     const core::EmbeddingTable& emb, const EvalOptions& opts);

double metric_value(const MetricTable& table, const std::string& name);

}  // namespace trl::harness

#include "trl/harness/evaluate.hpp"

#include <cmath>
#include <sstream>
#include <thread>

#include "trl/agent/decode.hpp"
#include "trl/error.hpp"
#include "trl/metrics/overlap.hpp"
#include "trl/simscore/kernel_cosine.hpp"
#include "trl/transport/wmd.hpp"

namespace trl::harness {

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> m = {"rouge_l", "bleu1", "bleu2", "bleu3", "bleu4", "cider", "wmd", "cos"};
  return m;
}

std::vector<std::string> parse_metric_list(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  for (std::string name; std::getline(in, name, ',');) {
    if (name.empty()) continue;
    if (name == "all") {
      out.insert(out.end(), known_metrics().begin(), known_metrics().end());
      continue;
    }
    if (std::find(known_metrics().begin(), known_metrics().end(), name) == known_metrics().end())
      throw Error("unknown metric '" + name + "' (expected rouge_l, bleu1..bleu4, cider, wmd, cos or all)");
    out.push_back(name);
  }
  return out;
}

EvalOptions eval_options(const TrainConfig& cfg) {
  EvalOptions o;
  o.beam = cfg.beam;
  o.max_len = cfg.max_len;
  o.workers = cfg.workers;
  o.aggregation = cfg.aggregation;
  o.kernel_window = cfg.kernel_window;
  o.wmd_similarity = cfg.wmd_similarity;
  return o;
}

std::vector<core::TokenSequence> decode_corpus(const agent::PolicyNetwork& policy, const core::Corpus& corpus,
                                               const EvalOptions& opts) {
  const std::size_t n = corpus.scenes.size();
  std::vector<core::TokenSequence> out(n);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < n; i += stride)
      out[i] = core::strip_markers(agent::beam_decode(policy, corpus.scenes[i].features, opts.beam, opts.max_len));
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(opts.workers, n));
  if (workers == 1) {
    work(0, 1);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        work(w, workers);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace {

double round2(double x) { return std::round(x * 100.0 * 100.0) / 100.0; }

template <class F>
double mean_over(const std::vector<core::TokenSequence>& cands, F&& f) {
  if (cands.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < cands.size(); ++i) s += cands[i].empty() ? 0.0 : f(i);
  return s / static_cast<double>(cands.size());
}

}  // namespace

MetricTable score_candidates(const std::vector<core::TokenSequence>& candidates,
                             const std::vector<std::vector<core::TokenSequence>>& references,
                             const std::vector<std::string>& metric_names, const core::EmbeddingTable* emb,
                             const EvalOptions& opts) {
  if (candidates.size() != references.size()) throw Error("score: misaligned candidate/reference lists");
  std::vector<core::TokenSequence> cands;
  std::vector<std::vector<core::TokenSequence>> refs;
  for (const auto& c : candidates) cands.push_back(core::strip_markers(c));
  for (const auto& rs : references) {
    if (rs.empty()) throw Error("score: scene without references");
    std::vector<core::TokenSequence> clean;
    for (const auto& r : rs) clean.push_back(core::strip_markers(r));
    refs.push_back(std::move(clean));
  }

  MetricTable table;
  for (const auto& name : metric_names) {
    double v = 0.0;
    if (name.rfind("bleu", 0) == 0 && name.size() == 5) {
      v = metrics::corpus_bleu(cands, refs, static_cast<std::size_t>(name[4] - '0'));
    } else if (name == "rouge_l") {
      v = mean_over(cands, [&](std::size_t i) { return metrics::rouge_l(cands[i], refs[i]); });
    } else if (name == "cider") {
      const auto idf = metrics::IdfTable::build(refs);
      v = mean_over(cands, [&](std::size_t i) { return metrics::cider_sentence(cands[i], refs[i], idf); });
    } else if (name == "wmd" || name == "cos") {
      if (!emb) throw Error("metric '" + name + "' needs word embeddings");
      if (name == "wmd") {
        transport::WmdRewardOptions o;
        o.similarity = opts.wmd_similarity;
        o.aggregation = opts.aggregation;
        v = mean_over(cands, [&](std::size_t i) { return transport::wmd_reward(cands[i], refs[i], *emb, o); });
      } else {
        simscore::KernelCosineOptions o;
        o.window = opts.kernel_window;
        o.aggregation = opts.aggregation;
        v = mean_over(cands, [&](std::size_t i) { return simscore::kernel_cosine(cands[i], refs[i], *emb, o); });
      }
    } else {
      throw Error("unknown metric '" + name + "'");
    }
    table.push_back({name, round2(v)});
  }
  return table;
}

MetricTable evaluate(const agent::PolicyNetwork& policy, const core::Corpus& corpus, const std::vector<std::string>& metrics,
                     const core::EmbeddingTable& emb, const EvalOptions& opts) {
  if (metrics.empty()) return {};
  for (const auto& m : metrics)
    if (std::find(known_metrics().begin(), known_metrics().end(), m) == known_metrics().end())
      throw Error("unknown metric '" + m + "'");
  if (corpus.scenes.empty()) throw Error("evaluate: corpus is empty");
  const auto cands = decode_corpus(policy, corpus, opts);
  std::vector<std::vector<core::TokenSequence>> refs;
  for (const auto& s : corpus.scenes) refs.push_back(s.references);
  return score_candidates(cands, refs, metrics, &emb, opts);
}

double metric_value(const MetricTable& table, const std::string& name) {
  for (const auto& m : table)
    if (m.name == name) return m.value;
  throw Error("metric '" + name + "' not in table");
}

}  // namespace trl::harness

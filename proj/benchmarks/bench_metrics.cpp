#include <benchmark/benchmark.h>

#include "trl/core/synthetic.hpp"
#include "trl/metrics/ngram.hpp"
#include "trl/metrics/overlap.hpp"
#include "trl/simscore/kernel_cosine.hpp"
#include "trl/simscore/reward_model.hpp"
#include "trl/transport/wmd.hpp"

using namespace trl;

namespace {

struct Data {
  core::SyntheticData synth = core::generate_synthetic_corpus({}, 7);
  core::EmbeddingTable emb = core::synthetic_embeddings(synth.lexicon, synth.corpus.vocabulary, 32, 7);
  metrics::IdfTable idf = metrics::IdfTable::build(synth.corpus);

  const core::Scene& scene(std::size_t i) const { return synth.corpus.scenes[i % synth.corpus.scenes.size()]; }
  // A candidate that is some other scene's caption, so scores are not trivial.
  const core::TokenSequence& candidate(std::size_t i) const { return scene(i + 1).references.front(); }
};

const Data& data() {
  static const Data d;
  return d;
}

void BM_SentenceBleu(benchmark::State& state) {
  const auto& d = data();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::bleu(d.candidate(i), d.scene(i).references, {4, true}));
    ++i;
  }
}
BENCHMARK(BM_SentenceBleu);

void BM_RougeL(benchmark::State& state) {
  const auto& d = data();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::rouge_l(d.candidate(i), d.scene(i).references));
    ++i;
  }
}
BENCHMARK(BM_RougeL);

void BM_CiderSentence(benchmark::State& state) {
  const auto& d = data();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::cider_sentence(d.candidate(i), d.scene(i).references, d.idf));
    ++i;
  }
}
BENCHMARK(BM_CiderSentence);

void BM_WmdReward(benchmark::State& state) {
  const auto& d = data();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(transport::wmd_reward(d.candidate(i), d.scene(i).references, d.emb));
    ++i;
  }
}
BENCHMARK(BM_WmdReward);

void BM_KernelCosine(benchmark::State& state) {
  const auto& d = data();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simscore::kernel_cosine(d.candidate(i), d.scene(i).references, d.emb, {}));
    ++i;
  }
}
BENCHMARK(BM_KernelCosine);

void BM_TrlReward(benchmark::State& state) {
  const auto& d = data();
  simscore::RewardModelConfig cfg;
  cfg.encoder.d_emb = d.emb.dim();
  cfg.encoder.d_h = 32;
  simscore::RewardModel m(cfg, 1);
  m.freeze();
  const auto refs = simscore::encode_references(m, d.scene(0).references, d.emb);
  for (auto _ : state) benchmark::DoNotOptimize(simscore::trl_reward(m, d.candidate(0), refs, d.emb));
}
BENCHMARK(BM_TrlReward);

}  // namespace

BENCHMARK_MAIN();

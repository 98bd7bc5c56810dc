#include <benchmark/benchmark.h>

#include "trl/agent/decode.hpp"
#include "trl/agent/networks.hpp"
#include "trl/nn/tape.hpp"

using namespace trl;

namespace {

// Desk dimensions: 64-wide embeddings and states, a few hundred words.
agent::NetworkConfig desk(std::size_t width) { return {300, 16, width, width}; }

const std::vector<double> kFeatures(16, 0.1);

void BM_PolicyStep(benchmark::State& state) {
  const agent::PolicyNetwork policy(desk(static_cast<std::size_t>(state.range(0))), 1);
  for (auto _ : state) {
    nn::Tape tape;
    auto ctx = policy.encode_context(tape, kFeatures);
    agent::PolicyNetwork::State next;
    benchmark::DoNotOptimize(policy.step(tape, core::kStart, policy.initial_state(tape), ctx, next).size());
  }
}
BENCHMARK(BM_PolicyStep)->Arg(64)->Arg(128)->Arg(512);

void BM_PolicyStepBackward(benchmark::State& state) {
  agent::PolicyNetwork policy(desk(static_cast<std::size_t>(state.range(0))), 1);
  for (auto _ : state) {
    nn::Tape tape;
    auto ctx = policy.encode_context(tape, kFeatures);
    agent::PolicyNetwork::State next;
    auto logp = policy.step(tape, core::kStart, policy.initial_state(tape), ctx, next);
    tape.backward(nn::pick(logp, 5));
  }
  policy.store().zero_grad();
}
BENCHMARK(BM_PolicyStepBackward)->Arg(64)->Arg(128);

void BM_SampleEpisode(benchmark::State& state) {
  const agent::PolicyNetwork policy(desk(64), 1);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(agent::sample_episode(policy, kFeatures, 16, seed++).length());
}
BENCHMARK(BM_SampleEpisode);

void BM_BeamDecode(benchmark::State& state) {
  const agent::PolicyNetwork policy(desk(64), 1);
  const auto width = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(agent::beam_decode(policy, kFeatures, width, 16).size());
}
BENCHMARK(BM_BeamDecode)->Arg(1)->Arg(5);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <random>

#include "trl/transport/emd.hpp"

using namespace trl::transport;

namespace {

struct Instance {
  std::vector<double> a, b;
  CostMatrix cost;
};

Instance random_instance(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Instance in{std::vector<double>(n), std::vector<double>(n), {}};
  std::vector<double> c(n * n);
  for (auto& x : c) x = 2.0 * u(rng);
  in.cost = CostMatrix(n, n, std::move(c));
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sa += in.a[i] = u(rng);
    sb += in.b[i] = u(rng);
  }
  for (auto& x : in.a) x /= sa;
  for (auto& x : in.b) x /= sb;
  return in;
}

void BM_Emd(benchmark::State& state) {
  const auto in = random_instance(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(emd(in.a, in.b, in.cost).distance);
}
BENCHMARK(BM_Emd)->RangeMultiplier(2)->Range(4, 64);

void BM_Sinkhorn(benchmark::State& state) {
  const auto in = random_instance(static_cast<std::size_t>(state.range(0)), 1);
  SinkhornOptions opts;
  opts.epsilon = 1e-2;
  for (auto _ : state) benchmark::DoNotOptimize(sinkhorn(in.a, in.b, in.cost, opts).cost);
}
BENCHMARK(BM_Sinkhorn)->RangeMultiplier(2)->Range(4, 64);

}  // namespace

BENCHMARK_MAIN();

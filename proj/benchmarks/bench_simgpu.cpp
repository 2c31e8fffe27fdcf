#include <benchmark/benchmark.h>

#include <random>

#include "genaibench/simgpu.hpp"

using namespace genaibench;

namespace {

std::vector<SimKernel> kernels(int apps, int per_app) {
  std::mt19937_64 rng(1);
  std::vector<SimKernel> ks;
  for (int a = 0; a < apps; ++a) {
    Nanos t = 0;
    for (int i = 0; i < per_app; ++i) {
      t += std::uniform_int_distribution<Nanos>(0, 2'000'000)(rng);
      ks.push_back({"app" + std::to_string(a), t, std::uniform_int_distribution<Nanos>(100'000, 5'000'000)(rng),
                    std::uniform_int_distribution<int>(1, 72)(rng)});
    }
  }
  return ks;
}

void BM_SimulateGreedy(benchmark::State& state) {
  const auto ks = kernels(4, static_cast<int>(state.range(0)));
  const SimDevice d{72, {}};
  for (auto _ : state) benchmark::DoNotOptimize(simulate(d, ks, Policy::greedy));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(ks.size()));
}
BENCHMARK(BM_SimulateGreedy)->Arg(100)->Arg(1000)->Arg(10000);

void BM_SimulatePartition(benchmark::State& state) {
  const auto ks = kernels(4, static_cast<int>(state.range(0)));
  SimDevice d{72, {}};
  for (int a = 0; a < 4; ++a) d.partitions["app" + std::to_string(a)] = 18;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(d, ks, Policy::static_partition));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(ks.size()));
}
BENCHMARK(BM_SimulatePartition)->Arg(100)->Arg(1000)->Arg(10000);

void BM_SynthUtilization(benchmark::State& state) {
  const SimDevice d{72, {}};
  const auto r = simulate(d, kernels(4, 1000), Policy::greedy);
  for (auto _ : state) benchmark::DoNotOptimize(synth_utilization(r, d, 100'000'000));
}
BENCHMARK(BM_SynthUtilization);

}  // namespace

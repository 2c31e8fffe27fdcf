#include <benchmark/benchmark.h>

#include <random>

#include "genaibench/metrics.hpp"

using namespace genaibench;

namespace {

std::vector<RequestRecord> chat_records(std::size_t n) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> gap(0.01, 0.4);
  std::vector<RequestRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    RequestRecord r;
    r.request_id = std::to_string(i);
    double t = gap(rng);
    for (int k = 0; k < 32; ++k, t += gap(rng)) r.token_times.push_back(t);
    r.t_first_output = r.token_times.front();
    r.t_complete = r.token_times.back();
    out.push_back(std::move(r));
  }
  return out;
}

void BM_EvaluateLatencyPair(benchmark::State& state) {
  const auto recs = chat_records(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_slo(recs, SloLatencyPair{1.0, 0.25}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EvaluateLatencyPair)->Arg(1000)->Arg(10000);

void BM_LatencyStats(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (auto& x : v) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(latency_stats(v));
}
BENCHMARK(BM_LatencyStats)->Arg(1000)->Arg(100000);

}  // namespace

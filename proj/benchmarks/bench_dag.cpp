#include <benchmark/benchmark.h>

#include "genaibench/dag.hpp"

using namespace genaibench;

namespace {

BenchmarkSpec chain_spec(int n) {
  BenchmarkSpec spec;
  TaskDefinition t;
  t.name = "t";
  spec.tasks["t"] = t;
  for (int i = 0; i < n; ++i) {
    WorkflowNodeSpec w;
    w.node_id = "n" + std::to_string(i);
    w.uses = "t";
    if (i > 0) w.depend_on.push_back("n" + std::to_string(i - 1));
    if (i > 1) w.depend_on.push_back("n" + std::to_string(i / 2));
    spec.workflow.push_back(std::move(w));
  }
  return spec;
}

void BM_BuildDag(benchmark::State& state) {
  const auto spec = chain_spec(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_dag(spec));
}
BENCHMARK(BM_BuildDag)->Arg(10)->Arg(100)->Arg(1000);

void BM_ValidateDag(benchmark::State& state) {
  const auto dag = build_dag(chain_spec(static_cast<int>(state.range(0))));
  for (auto _ : state) validate_dag(dag);
}
BENCHMARK(BM_ValidateDag)->Arg(10)->Arg(100)->Arg(1000);

void BM_ReadySetWalk(benchmark::State& state) {
  const auto dag = build_dag(chain_spec(static_cast<int>(state.range(0))));
  for (auto _ : state) {
    std::set<std::string> done;
    while (done.size() < dag.size()) {
      for (const auto& id : ready_set(dag, done)) done.insert(id);
    }
    benchmark::DoNotOptimize(done);
  }
}
BENCHMARK(BM_ReadySetWalk)->Arg(10)->Arg(100);

}  // namespace

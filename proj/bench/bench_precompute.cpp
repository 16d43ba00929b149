#include <benchmark/benchmark.h>

#include "editorch/corpora.hpp"
#include "editorch/orchestrator.hpp"

using namespace editorch;

namespace {

const std::vector<PrecomputeTask>& tasks() {
  static const std::vector<PrecomputeTask> t = [] {
    std::vector<PrecomputeTask> out;
    Rng rng(11);
    for (std::uint64_t i = 0; i < 64; ++i) {
      const Instance inst = generate_instance(1000 + i, Difficulty::Medium);
      out.push_back({inst.id, inst.doc, template_plan(inst, rng), derive_seed(5, i)});
    }
    return out;
  }();
  return t;
}

const ProfileSet& profiles() {
  static const ProfileSet p = ProfileSet::defaults();
  return p;
}

void BM_PrecomputeSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(precompute_rewards_serial(tasks(), profiles()));
}

void BM_PrecomputeParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(precompute_rewards(tasks(), profiles()));
}

}  // namespace

BENCHMARK(BM_PrecomputeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PrecomputeParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

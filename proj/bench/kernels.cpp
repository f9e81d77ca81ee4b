// OpenMP kernels against their serial references.
#include <map>

#include <benchmark/benchmark.h>

#include "bwsann/design.hpp"
#include "bwsann/reliability.hpp"
#include "bwsann/scoring.hpp"
#include "bwsann/simulate.hpp"

namespace {

struct Fixture {
  bwsann::BwsDesign design;
  std::vector<bwsann::Judgment> judgments;
};

const Fixture& fixture(int items) {
  static std::map<int, Fixture> cache;
  auto it = cache.find(items);
  if (it == cache.end()) {
    const auto world = bwsann::make_uniform_world(items, 0.05, 7);
    Fixture f{bwsann::generate_design(world.items, 4, 2000, 7), {}};
    f.judgments = bwsann::simulate_judgments(world, f.design, 3);
    it = cache.emplace(items, std::move(f)).first;
  }
  return it->second;
}

void BM_ScoresSerial(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bwsann::compute_scores_serial(f.judgments, f.design));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.judgments.size()));
}

void BM_ScoresParallel(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bwsann::compute_scores(f.judgments, f.design));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.judgments.size()));
}

void BM_SplitHalfSerial(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bwsann::split_half_reliability_serial(f.judgments, f.design, 100, 1));
}

void BM_SplitHalfParallel(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bwsann::split_half_reliability(f.judgments, f.design, 100, 1));
}

BENCHMARK(BM_ScoresSerial)->Arg(1000)->Arg(20000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ScoresParallel)->Arg(1000)->Arg(20000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SplitHalfSerial)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SplitHalfParallel)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

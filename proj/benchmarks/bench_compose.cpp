#include <benchmark/benchmark.h>

#include "muses/fixtures.hpp"
#include "muses/session.hpp"

using namespace muses;

namespace {

// Quadruped base with winged donor, planned and ready to compose.
Session wings_session() {
  PipelineConfig cfg;
  cfg.sources = {"fixture:quadruped", "fixture:winged"};
  Session s(cfg, std::make_shared<ModelGateway>());
  s.add_asset(s.load_source("fixture:quadruped"));
  s.add_asset(s.load_source("fixture:winged"));
  s.classify();
  s.plan("a quadruped with wings");
  return s;
}

void BM_ComposeWings(benchmark::State& state) {
  Session s = wings_session();
  for (auto _ : state) benchmark::DoNotOptimize(s.composition());
  state.counters["voxels"] = static_cast<double>(s.composition().latent.size());
}
BENCHMARK(BM_ComposeWings)->Unit(benchmark::kMillisecond);

void BM_MergeOverlaps(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> w(n);
  std::vector<std::vector<double>> f(n, std::vector<double>(8));
  SplitMix64 rng(1);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = rng.uniform(0.1, 1.0);
    for (auto& x : f[i]) x = rng.uniform(-1, 1);
  }
  for (auto _ : state) benchmark::DoNotOptimize(merge_overlaps(w, f));
}
BENCHMARK(BM_MergeOverlaps)->Arg(2)->Arg(8)->Arg(32);

void BM_WingsSessionSetup(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(wings_session().revision());
}
BENCHMARK(BM_WingsSessionSetup)->Unit(benchmark::kMillisecond);

}  // namespace

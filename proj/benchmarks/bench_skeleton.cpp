#include <benchmark/benchmark.h>

#include "muses/skeleton.hpp"
#include "muses/templates.hpp"

using namespace muses;

namespace {

void BM_Classify(benchmark::State& state) {
  auto kind = static_cast<TemplateKind>(state.range(0));
  CreatureTemplate t = make_template(kind, {7, 0.1, 0.05});
  for (auto _ : state) {
    CleanSkeleton c = clean_skeleton(t.skeleton);
    benchmark::DoNotOptimize(classify_regions(c, estimate_orientation(c)));
  }
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_Classify)->DenseRange(0, 3);

}  // namespace

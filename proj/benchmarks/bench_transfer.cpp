#include <benchmark/benchmark.h>

#include "muses/knn.hpp"
#include "muses/region_mapper.hpp"
#include "muses/templates.hpp"

using namespace muses;

namespace {

std::vector<Vec3> points(SplitMix64& rng, int n) {
  std::vector<Vec3> p;
  p.reserve(n);
  for (int i = 0; i < n; ++i) p.emplace_back(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
  return p;
}

void BM_KdTreeBuild(benchmark::State& state) {
  SplitMix64 rng(3);
  auto p = points(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(KdTree(p));
}
BENCHMARK(BM_KdTreeBuild)->Arg(1000)->Arg(10000);

// Region weights from mesh vertices onto voxel centres, k = 8.
void BM_KnnTransfer(benchmark::State& state) {
  SplitMix64 rng(4);
  const int q = static_cast<int>(state.range(0));
  auto verts = points(rng, q);
  auto voxels = points(rng, static_cast<int>(state.range(1)));
  Eigen::MatrixXd rows = Eigen::MatrixXd::Random(q, 6).cwiseAbs();
  for (int i = 0; i < q; ++i) rows.row(i) /= rows.row(i).sum();
  std::vector<PartRef> refs;
  for (int i = 0; i < 6; ++i) refs.push_back({"a0", RegionLabel::Leg, i + 1});
  RegionWeightMatrix rw{rows, refs};
  for (auto _ : state) benchmark::DoNotOptimize(knn_transfer(rw, verts, voxels));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_KnnTransfer)->Args({2000, 10000})->Args({10000, 50000})->Unit(benchmark::kMillisecond);

}  // namespace

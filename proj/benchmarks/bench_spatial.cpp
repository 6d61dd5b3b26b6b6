#include <benchmark/benchmark.h>

#include <vector>

#include "geowealth/geo.hpp"
#include "geowealth/rng.hpp"

using namespace geowealth;

namespace {

std::vector<GeoPoint> scatter(std::size_t n, Rng& rng) {
  std::vector<GeoPoint> p;
  p.reserve(n);
  for (std::size_t i = 0; i < n; ++i) p.push_back(GeoPoint::make(rng.uniform(-5, 5), rng.uniform(30, 40)));
  return p;
}

void BM_IndexBuild(benchmark::State& state) {
  Rng rng(1);
  const auto pts = scatter(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) {
    SpatialIndex index(pts);
    benchmark::DoNotOptimize(index.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IndexBuild)->Arg(5000)->Arg(50000);

void BM_RadiusQuery(benchmark::State& state) {
  Rng rng(2);
  const SpatialIndex index(scatter(50000, rng));
  const auto queries = scatter(1024, rng);
  const double r = static_cast<double>(state.range(0));
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.radius_query(queries[q++ & 1023], r));
  }
}
BENCHMARK(BM_RadiusQuery)->Arg(2)->Arg(10)->Arg(100);

void BM_KnnQuery(benchmark::State& state) {
  Rng rng(3);
  const SpatialIndex index(scatter(50000, rng));
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.knn_of(q++ % 50000, static_cast<std::size_t>(state.range(0)), 100.0));
  }
}
BENCHMARK(BM_KnnQuery)->Arg(8)->Arg(32);

}  // namespace

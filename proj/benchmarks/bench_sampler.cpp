#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "geowealth/csr.hpp"
#include "geowealth/rng.hpp"
#include "geowealth/sampler.hpp"

using namespace geowealth;

namespace {

void BM_SampleNeighborhood(benchmark::State& state) {
  Rng rng(1);
  const std::size_t n = 20000;
  std::vector<WeightedEdge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 6; ++k) {
      const std::size_t j = rng.below(n);
      if (j != i) edges.push_back({std::min(i, j), std::max(i, j), 1.0});
    }
  }
  const Csr g = Csr::from_undirected(n, edges);
  std::vector<std::size_t> roots(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    for (auto& r : roots) r = rng.below(n);
    benchmark::DoNotOptimize(sample_neighborhood(g, roots, Fanouts{}, rng));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleNeighborhood)->Arg(64)->Arg(256);

}  // namespace

#include <benchmark/benchmark.h>

#include <vector>

#include "geowealth/csr.hpp"
#include "geowealth/nn.hpp"
#include "geowealth/rng.hpp"

using namespace geowealth;
using namespace geowealth::nn;

namespace {

// Ring plus random chords, average degree around 10.
Csr test_graph(std::size_t n, Rng& rng) {
  std::vector<WeightedEdge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    edges.push_back({i, (i + 1) % n, 1.0});
    for (int k = 0; k < 4; ++k) {
      const std::size_t j = rng.below(n);
      if (j != i) edges.push_back({std::min(i, j), std::max(i, j), 1.0});
    }
  }
  return Csr::from_undirected(n, edges);
}

Matrix features(std::size_t n, Rng& rng) {
  Matrix x(n, 64);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

void BM_GcnForward(benchmark::State& state) {
  Rng rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Propagation prop(test_graph(n, rng));
  const auto x = features(n, rng);
  const auto p = init_params(Architecture::GCN, {}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(gcn_forward(p, x, prop));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GcnForward)->Arg(1000)->Arg(10000);

void BM_GcnForwardBackward(benchmark::State& state) {
  Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Propagation prop(test_graph(n, rng));
  const auto x = features(n, rng);
  const auto p = init_params(Architecture::GCN, {}, rng);
  auto grads = p.zeros_like();
  const Matrix d_out = Matrix::Ones(static_cast<Eigen::Index>(n), 1);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(gcn_forward(p, x, prop, &tape));
    backward(p, tape, &prop, d_out, grads);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GcnForwardBackward)->Arg(1000)->Arg(10000);

void BM_MlpForwardBackward(benchmark::State& state) {
  Rng rng(3);
  const auto x = features(512, rng);
  const auto p = init_params(Architecture::MLP, {}, rng);
  auto grads = p.zeros_like();
  const Matrix d_out = Matrix::Ones(512, 1);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(mlp_forward(p, x, &tape));
    backward(p, tape, nullptr, d_out, grads);
  }
}
BENCHMARK(BM_MlpForwardBackward);

}  // namespace

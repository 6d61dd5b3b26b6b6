#include "geowealth/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_map>

#include "geowealth/error.hpp"

namespace geowealth {
namespace {

// Partial Fisher-Yates: the first `take` entries become a uniform sample.
std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool,
                                                    std::size_t take, Rng& rng) {
  take = std::min(take, pool.size());
  for (std::size_t i = 0; i < take; ++i) {
    std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  }
  pool.resize(take);
  return pool;
}

class LocalIds {
 public:
  std::size_t add(std::size_t global) {
    const auto [it, inserted] = map_.emplace(global, order_.size());
    if (inserted) order_.push_back(global);
    return it->second;
  }
  std::size_t at(std::size_t global) const { return map_.at(global); }
  std::vector<std::size_t> release() { return std::move(order_); }

 private:
  std::unordered_map<std::size_t, std::size_t> map_;
  std::vector<std::size_t> order_;
};

}  // namespace

void SubgraphBatch::validate() const {
  adjacency.validate();
  if (adjacency.num_rows() != node_indices.size()) {
    throw ValidationError("batch adjacency size does not match node count");
  }
  if (roots.size() != root_local_ids.size()) throw ValidationError("batch root lists disagree");
  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (root_local_ids[r] >= node_indices.size() || node_indices[root_local_ids[r]] != roots[r]) {
      throw ValidationError("batch root " + std::to_string(roots[r]) + " missing");
    }
  }
}

SubgraphBatch sample_neighborhood(const Csr& graph, std::span<const std::size_t> roots,
                                  const Fanouts& fanouts, Rng& rng) {
  if (roots.empty()) throw DomainError("sample_neighborhood: no roots");
  const std::size_t n = graph.num_rows();
  LocalIds ids;
  SubgraphBatch batch;
  for (std::size_t r : roots) {
    if (r >= n) throw DomainError("sample_neighborhood: root out of range");
    batch.roots.push_back(r);
    batch.root_local_ids.push_back(ids.add(r));
  }

  std::vector<WeightedEdge> edges;  // local ids
  for (std::size_t root : roots) {
    const auto nbrs = graph.neighbors(root);
    const auto hop1 = sample_without_replacement({nbrs.begin(), nbrs.end()}, fanouts.hop1, rng);
    for (std::size_t u : hop1) {
      edges.push_back(WeightedEdge{ids.add(root), ids.add(u), edge_weight(graph, root, u)});
    }

    std::vector<std::size_t> pool;
    for (std::size_t u : hop1) {
      for (std::size_t v : graph.neighbors(u)) {
        if (v != root) pool.push_back(v);
      }
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

    const auto hop2 = sample_without_replacement(std::move(pool), fanouts.hop2, rng);
    for (std::size_t v : hop2) {
      const std::size_t lv = ids.add(v);
      for (std::size_t u : hop1) {
        const double w = edge_weight(graph, u, v);
        if (w > 0.0) edges.push_back(WeightedEdge{ids.at(u), lv, w});
      }
    }
  }

  batch.node_indices = ids.release();
  batch.adjacency = Csr::from_undirected(batch.node_indices.size(), edges);
  return batch;
}

std::vector<std::size_t> ego_offsets(std::span<const SpatialGraph> egos) {
  std::vector<std::size_t> offsets(egos.size() + 1, 0);
  for (std::size_t i = 0; i < egos.size(); ++i) offsets[i + 1] = offsets[i] + egos[i].size();
  return offsets;
}

SubgraphBatch union_ego_graphs(std::span<const SpatialGraph> egos,
                               std::span<const std::size_t> offsets,
                               std::span<const std::size_t> which) {
  SubgraphBatch batch;
  std::size_t total = 0;
  for (std::size_t g : which) {
    if (g >= egos.size()) throw DomainError("union_ego_graphs: ego index out of range");
    total += egos[g].size();
  }
  batch.node_indices.reserve(total);
  auto& adj = batch.adjacency;
  adj.offsets.reserve(total + 1);
  for (std::size_t g : which) {
    const auto& ego = egos[g];
    const std::size_t local_base = batch.node_indices.size();
    const std::size_t entry_base = adj.columns.size();
    batch.roots.push_back(offsets[g]);
    batch.root_local_ids.push_back(local_base);
    for (std::size_t i = 0; i < ego.size(); ++i) batch.node_indices.push_back(offsets[g] + i);
    for (std::size_t r = 1; r < ego.adjacency.offsets.size(); ++r) {
      adj.offsets.push_back(entry_base + ego.adjacency.offsets[r]);
    }
    for (std::size_t c : ego.adjacency.columns) adj.columns.push_back(local_base + c);
    adj.weights.insert(adj.weights.end(), ego.adjacency.weights.begin(), ego.adjacency.weights.end());
  }
  return batch;
}

SubgraphBatch batch_ego_graphs(std::span<const SpatialGraph> egos, std::size_t batch_size,
                               Rng& rng) {
  if (batch_size == 0) throw DomainError("batch_ego_graphs: batch_size must be >= 1");
  std::vector<std::size_t> all(egos.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto chosen = sample_without_replacement(std::move(all), batch_size, rng);
  const auto offsets = ego_offsets(egos);
  return union_ego_graphs(egos, offsets, chosen);
}

}  // namespace geowealth

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "geowealth/csr.hpp"
#include "geowealth/graph.hpp"
#include "geowealth/rng.hpp"

namespace geowealth {

/// A sampled training subgraph. Local node i is global node node_indices[i].
struct SubgraphBatch {
  std::vector<std::size_t> node_indices;
  Csr adjacency;
  /// Global id of each root, in request order, and its local position.
  std::vector<std::size_t> roots;
  std::vector<std::size_t> root_local_ids;

  std::size_t size() const noexcept { return node_indices.size(); }
  void validate() const;
};

struct Fanouts {
  std::size_t hop1 = 4;
  std::size_t hop2 = 16;
};

/// Per root: up to `hop1` distinct neighbours drawn uniformly without
/// replacement, then up to `hop2` distinct nodes drawn from the pooled
/// neighbourhoods of those first-hop picks (the root itself excluded). Kept
/// edges are root-hop1 and hop1-hop2 pairs present in `graph`, stored
/// symmetrically with their original weights. Local order: roots first, then
/// nodes by first appearance.
SubgraphBatch sample_neighborhood(const Csr& graph, std::span<const std::size_t> roots,
                                  const Fanouts& fanouts, Rng& rng);

/// Prefix offsets of ego graphs in their disjoint union (size n + 1).
std::vector<std::size_t> ego_offsets(std::span<const SpatialGraph> egos);

/// Disjoint union of the chosen ego graphs. Global ids refer to the union of
/// *all* ego graphs (see ego_offsets); roots are the centres.
SubgraphBatch union_ego_graphs(std::span<const SpatialGraph> egos,
                               std::span<const std::size_t> offsets,
                               std::span<const std::size_t> which);

/// `batch_size` distinct ego graphs chosen uniformly (all of them, shuffled,
/// when batch_size exceeds the count).
SubgraphBatch batch_ego_graphs(std::span<const SpatialGraph> egos, std::size_t batch_size,
                               Rng& rng);

}  // namespace geowealth

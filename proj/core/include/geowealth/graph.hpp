#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geowealth/csr.hpp"
#include "geowealth/dataset.hpp"
#include "geowealth/displacement.hpp"
#include "geowealth/geo.hpp"

namespace geowealth {

enum class NodeClass { SurveyCluster, Settlement, Phantom };

std::string_view to_string(NodeClass c);

struct Node {
  std::string key;
  GeoPoint location;
  std::vector<double> embedding;
  std::optional<double> label;
  NodeClass node_class = NodeClass::Settlement;
  std::optional<std::string> survey_id;
};

/// Nodes plus an undirected weighted adjacency (each edge stored in both
/// rows, no self-edges).
struct SpatialGraph {
  std::vector<Node> nodes;
  Csr adjacency;

  std::size_t size() const noexcept { return nodes.size(); }
  void validate() const;
};

struct FuzzyCandidate {
  std::size_t node = 0;
  double probability = 0.0;
};

/// Candidate true locations for labelled cluster `label_index`.
struct FuzzyAssignment {
  std::size_t label_index = 0;
  std::vector<FuzzyCandidate> candidates;
};

/// Candidate node universe (settlements, then phantoms) with one assignment
/// and one label per cluster, in cluster order.
struct FuzzyProblem {
  std::vector<Node> nodes;
  std::vector<FuzzyAssignment> assignments;
  std::vector<double> labels;
  std::size_t phantom_count = 0;
};

struct FuzzyGraph {
  SpatialGraph graph;
  std::vector<FuzzyAssignment> assignments;
  std::vector<double> labels;
  std::size_t phantom_count = 0;
};

inline constexpr double kDefaultThresholdKm = 100.0;
inline constexpr std::size_t kDefaultNeighbors = 8;
/// Inverse-distance weights clamp distances below this value.
inline constexpr double kMinEdgeDistanceKm = 0.1;

double inverse_distance_weight(double distance_km);

Node cluster_node(const SurveyCluster& cluster, const EmbeddingTable& embeddings);
Node settlement_node(const Settlement& settlement, const EmbeddingTable& embeddings);
Node phantom_node(const SurveyCluster& cluster, const EmbeddingTable& embeddings);

/// Clusters as nodes; edges join clusters of the same survey closer than
/// `threshold_km`.
SpatialGraph build_dhs_graph(std::span<const SurveyCluster> clusters,
                             const EmbeddingTable& embeddings,
                             double threshold_km = kDefaultThresholdKm);

/// Clusters then settlements. Cluster-cluster edges as in build_dhs_graph;
/// every settlement links to its k nearest nodes of either kind within
/// `threshold_km`; the union is symmetrised.
SpatialGraph build_full_graph(std::span<const SurveyCluster> clusters,
                              std::span<const Settlement> settlements,
                              const EmbeddingTable& embeddings,
                              std::size_t k = kDefaultNeighbors,
                              double threshold_km = kDefaultThresholdKm);

/// One star per cluster: node 0 is the cluster at its reported coordinate,
/// leaves are settlements within the displacement radius, ordered by
/// (distance, settlement index). Edge weights are normalised displacement
/// likelihoods.
std::vector<SpatialGraph> build_ego_graphs(std::span<const SurveyCluster> clusters,
                                           std::span<const Settlement> settlements,
                                           const EmbeddingTable& embeddings,
                                           const DisplacementModel& model);

/// Candidate settlements per cluster with P_ji proportional to the
/// displacement likelihood; a phantom at the reported coordinate stands in
/// when no settlement is in range.
FuzzyProblem build_fuzzy_assignments(std::span<const SurveyCluster> clusters,
                                     std::span<const Settlement> settlements,
                                     const EmbeddingTable& embeddings,
                                     const DisplacementModel& model);

/// Fuzzy assignments over a kNN graph of settlements and phantoms. Survey
/// cluster nodes are not part of this graph.
FuzzyGraph build_fuzzy_graph(std::span<const SurveyCluster> clusters,
                             std::span<const Settlement> settlements,
                             const EmbeddingTable& embeddings, const DisplacementModel& model,
                             std::size_t k = kDefaultNeighbors,
                             double threshold_km = kDefaultThresholdKm);

/// Symmetrised kNN edges (each node initiates) over `nodes[first..]`,
/// searching among all `nodes`.
std::vector<WeightedEdge> knn_edges(std::span<const Node> nodes, std::size_t first,
                                    std::size_t k, double threshold_km);

/// Disjoint union of graphs with node indices offset in order.
SpatialGraph disjoint_union(std::span<const SpatialGraph> graphs);

/// Debug dump: `<prefix>nodes.csv` (index,key,class,lat,lon,survey_id,label)
/// and `<prefix>edges.csv` (src,dst,weight with node indices, each
/// undirected edge once with src < dst).
void write_graph_dump(const SpatialGraph& graph, const std::string& nodes_path,
                      const std::string& edges_path);
/// `cluster,node,key,probability` rows.
void write_assignments(std::span<const FuzzyAssignment> assignments, std::span<const Node> nodes,
                       const std::string& path);

}  // namespace geowealth

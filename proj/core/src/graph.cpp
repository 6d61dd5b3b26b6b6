#include "geowealth/graph.hpp"

#include <algorithm>
#include <cmath>

#include "geowealth/csv.hpp"
#include "geowealth/error.hpp"

namespace geowealth {
namespace {

std::vector<GeoPoint> locations(std::span<const Node> nodes) {
  std::vector<GeoPoint> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.location);
  return out;
}

std::vector<double> to_vector(std::span<const double> v) { return {v.begin(), v.end()}; }

std::vector<WeightedEdge> same_survey_edges(std::span<const SurveyCluster> clusters,
                                            double threshold_km) {
  std::vector<GeoPoint> points;
  points.reserve(clusters.size());
  for (const auto& c : clusters) points.push_back(c.reported);
  const SpatialIndex index(std::move(points));
  std::vector<WeightedEdge> edges;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    for (const auto& nb : index.radius_query(clusters[i].reported, threshold_km)) {
      if (nb.id <= i || nb.distance_km >= threshold_km) continue;
      if (clusters[nb.id].survey_id != clusters[i].survey_id) continue;
      edges.push_back(WeightedEdge{i, nb.id, inverse_distance_weight(nb.distance_km)});
    }
  }
  return edges;
}

struct Candidates {
  std::vector<std::size_t> settlement;
  std::vector<double> probability;
};

Candidates displacement_candidates(const SurveyCluster& cluster, const SpatialIndex& index,
                                   const DisplacementModel& model) {
  Candidates out;
  const auto hits = index.radius_query(cluster.reported, model.max_radius(cluster.kind));
  double total = 0.0;
  for (const auto& h : hits) {
    const double l = likelihood(model, cluster.kind, h.distance_km);
    out.settlement.push_back(h.id);
    out.probability.push_back(l);
    total += l;
  }
  for (auto& p : out.probability) p /= total;
  return out;
}

}  // namespace

std::string_view to_string(NodeClass c) {
  switch (c) {
    case NodeClass::SurveyCluster:
      return "cluster";
    case NodeClass::Settlement:
      return "settlement";
    case NodeClass::Phantom:
      return "phantom";
  }
  return "unknown";
}

void SpatialGraph::validate() const {
  if (adjacency.num_rows() != nodes.size()) {
    throw ValidationError("graph adjacency has " + std::to_string(adjacency.num_rows()) +
                          " rows for " + std::to_string(nodes.size()) + " nodes");
  }
  adjacency.validate();
  if (!adjacency.is_symmetric()) throw ValidationError("graph adjacency is not symmetric");
}

double inverse_distance_weight(double distance_km) {
  return 1.0 / std::max(distance_km, kMinEdgeDistanceKm);
}

Node cluster_node(const SurveyCluster& cluster, const EmbeddingTable& embeddings) {
  const std::string key = cluster.key();
  return Node{key, cluster.reported, to_vector(embeddings.at(key)), cluster.iwi,
              NodeClass::SurveyCluster, cluster.survey_id};
}

Node settlement_node(const Settlement& settlement, const EmbeddingTable& embeddings) {
  return Node{settlement.settlement_id, settlement.location,
              to_vector(embeddings.at(settlement.settlement_id)), std::nullopt,
              NodeClass::Settlement, std::nullopt};
}

Node phantom_node(const SurveyCluster& cluster, const EmbeddingTable& embeddings) {
  const std::string key = cluster.key();
  return Node{"phantom:" + key, cluster.reported, to_vector(embeddings.at(key)), std::nullopt,
              NodeClass::Phantom, cluster.survey_id};
}

std::vector<WeightedEdge> knn_edges(std::span<const Node> nodes, std::size_t first, std::size_t k,
                                    double threshold_km) {
  const SpatialIndex index(locations(nodes));
  std::vector<WeightedEdge> edges;
  for (std::size_t i = first; i < nodes.size(); ++i) {
    for (const auto& nb : index.knn_of(i, k, threshold_km)) {
      edges.push_back(WeightedEdge{i, nb.id, inverse_distance_weight(nb.distance_km)});
    }
  }
  return edges;
}

SpatialGraph build_dhs_graph(std::span<const SurveyCluster> clusters,
                             const EmbeddingTable& embeddings, double threshold_km) {
  SpatialGraph g;
  g.nodes.reserve(clusters.size());
  for (const auto& c : clusters) g.nodes.push_back(cluster_node(c, embeddings));
  const auto edges = same_survey_edges(clusters, threshold_km);
  g.adjacency = Csr::from_undirected(g.nodes.size(), edges);
  return g;
}

SpatialGraph build_full_graph(std::span<const SurveyCluster> clusters,
                              std::span<const Settlement> settlements,
                              const EmbeddingTable& embeddings, std::size_t k,
                              double threshold_km) {
  SpatialGraph g;
  g.nodes.reserve(clusters.size() + settlements.size());
  for (const auto& c : clusters) g.nodes.push_back(cluster_node(c, embeddings));
  for (const auto& s : settlements) g.nodes.push_back(settlement_node(s, embeddings));
  auto edges = same_survey_edges(clusters, threshold_km);
  const auto knn = knn_edges(g.nodes, clusters.size(), k, threshold_km);
  edges.insert(edges.end(), knn.begin(), knn.end());
  g.adjacency = Csr::from_undirected(g.nodes.size(), edges);
  return g;
}

std::vector<SpatialGraph> build_ego_graphs(std::span<const SurveyCluster> clusters,
                                           std::span<const Settlement> settlements,
                                           const EmbeddingTable& embeddings,
                                           const DisplacementModel& model) {
  model.validate();
  std::vector<GeoPoint> points;
  points.reserve(settlements.size());
  for (const auto& s : settlements) points.push_back(s.location);
  const SpatialIndex index(std::move(points));

  std::vector<SpatialGraph> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) {
    SpatialGraph g;
    g.nodes.push_back(cluster_node(c, embeddings));
    const auto cand = displacement_candidates(c, index, model);
    std::vector<WeightedEdge> edges;
    for (std::size_t i = 0; i < cand.settlement.size(); ++i) {
      g.nodes.push_back(settlement_node(settlements[cand.settlement[i]], embeddings));
      edges.push_back(WeightedEdge{0, i + 1, cand.probability[i]});
    }
    g.adjacency = Csr::from_undirected(g.nodes.size(), edges);
    out.push_back(std::move(g));
  }
  return out;
}

FuzzyProblem build_fuzzy_assignments(std::span<const SurveyCluster> clusters,
                                     std::span<const Settlement> settlements,
                                     const EmbeddingTable& embeddings,
                                     const DisplacementModel& model) {
  model.validate();
  FuzzyProblem problem;
  problem.nodes.reserve(settlements.size());
  std::vector<GeoPoint> points;
  points.reserve(settlements.size());
  for (const auto& s : settlements) {
    problem.nodes.push_back(settlement_node(s, embeddings));
    points.push_back(s.location);
  }
  const SpatialIndex index(std::move(points));

  for (std::size_t j = 0; j < clusters.size(); ++j) {
    const auto& c = clusters[j];
    FuzzyAssignment a;
    a.label_index = j;
    const auto cand = displacement_candidates(c, index, model);
    if (cand.settlement.empty()) {
      a.candidates.push_back(FuzzyCandidate{problem.nodes.size(), 1.0});
      problem.nodes.push_back(phantom_node(c, embeddings));
      ++problem.phantom_count;
    } else {
      for (std::size_t i = 0; i < cand.settlement.size(); ++i) {
        a.candidates.push_back(FuzzyCandidate{cand.settlement[i], cand.probability[i]});
      }
    }
    problem.assignments.push_back(std::move(a));
    problem.labels.push_back(c.iwi);
  }
  return problem;
}

FuzzyGraph build_fuzzy_graph(std::span<const SurveyCluster> clusters,
                             std::span<const Settlement> settlements,
                             const EmbeddingTable& embeddings, const DisplacementModel& model,
                             std::size_t k, double threshold_km) {
  FuzzyProblem problem = build_fuzzy_assignments(clusters, settlements, embeddings, model);
  FuzzyGraph out;
  const auto edges = knn_edges(problem.nodes, 0, k, threshold_km);
  out.graph.adjacency = Csr::from_undirected(problem.nodes.size(), edges);
  out.graph.nodes = std::move(problem.nodes);
  out.assignments = std::move(problem.assignments);
  out.labels = std::move(problem.labels);
  out.phantom_count = problem.phantom_count;
  return out;
}

SpatialGraph disjoint_union(std::span<const SpatialGraph> graphs) {
  SpatialGraph out;
  std::size_t total_nodes = 0;
  std::size_t total_entries = 0;
  for (const auto& g : graphs) {
    total_nodes += g.nodes.size();
    total_entries += g.adjacency.num_entries();
  }
  out.nodes.reserve(total_nodes);
  out.adjacency.offsets.reserve(total_nodes + 1);
  out.adjacency.columns.reserve(total_entries);
  out.adjacency.weights.reserve(total_entries);
  for (const auto& g : graphs) {
    const std::size_t node_base = out.nodes.size();
    const std::size_t entry_base = out.adjacency.columns.size();
    out.nodes.insert(out.nodes.end(), g.nodes.begin(), g.nodes.end());
    for (std::size_t r = 1; r < g.adjacency.offsets.size(); ++r) {
      out.adjacency.offsets.push_back(entry_base + g.adjacency.offsets[r]);
    }
    for (std::size_t col : g.adjacency.columns) out.adjacency.columns.push_back(node_base + col);
    out.adjacency.weights.insert(out.adjacency.weights.end(), g.adjacency.weights.begin(),
                                 g.adjacency.weights.end());
  }
  return out;
}

void write_graph_dump(const SpatialGraph& graph, const std::string& nodes_path,
                      const std::string& edges_path) {
  auto nodes = csv::open_output(nodes_path);
  nodes << "index,key,class,lat,lon,survey_id,label\n";
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& n = graph.nodes[i];
    nodes << i << ',' << n.key << ',' << to_string(n.node_class) << ','
          << csv::format_double(n.location.lat) << ',' << csv::format_double(n.location.lon) << ','
          << n.survey_id.value_or("") << ','
          << (n.label ? csv::format_double(*n.label) : std::string()) << '\n';
  }
  auto edges = csv::open_output(edges_path);
  edges << "src,dst,weight\n";
  const auto& a = graph.adjacency;
  for (std::size_t r = 0; r < a.num_rows(); ++r) {
    for (std::size_t p = a.offsets[r]; p < a.offsets[r + 1]; ++p) {
      if (a.columns[p] > r) edges << r << ',' << a.columns[p] << ',' << csv::format_double(a.weights[p]) << '\n';
    }
  }
  if (!nodes || !edges) throw Error("failed writing graph dump");
}

void write_assignments(std::span<const FuzzyAssignment> assignments, std::span<const Node> nodes,
                       const std::string& path) {
  auto out = csv::open_output(path);
  out << "cluster,node,key,probability\n";
  for (const auto& a : assignments) {
    for (const auto& c : a.candidates) {
      out << a.label_index << ',' << c.node << ',' << nodes[c.node].key << ','
          << csv::format_double(c.probability) << '\n';
    }
  }
  if (!out) throw Error("failed writing assignments");
}

}  // namespace geowealth

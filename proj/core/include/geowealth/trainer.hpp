#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geowealth/dataset.hpp"
#include "geowealth/displacement.hpp"
#include "geowealth/folds.hpp"
#include "geowealth/kvconfig.hpp"
#include "geowealth/metrics.hpp"
#include "geowealth/nn.hpp"
#include "geowealth/optim.hpp"
#include "geowealth/sampler.hpp"

namespace geowealth {

/// The six modelling variants.
///   A  points        MLP on cluster embeddings, MSE
///   B  DHS graph     GCN on per-survey cluster graph, MSE
///   C  full graph    GCN on clusters + settlements, MSE
///   D  ego graphs    GCN on per-cluster candidate stars, MSE at centres
///   E  points fuzzy  MLP on candidate settlements, fuzzy loss
///   F  graph fuzzy   GCN on settlement/phantom graph, fuzzy loss
enum class Method { A_Points, B_DhsGraph, C_FullGraph, D_EgoGraphs, E_PointsFuzzy, F_GraphFuzzy };

inline constexpr Method kAllMethods[] = {Method::A_Points,    Method::B_DhsGraph,
                                         Method::C_FullGraph, Method::D_EgoGraphs,
                                         Method::E_PointsFuzzy, Method::F_GraphFuzzy};

struct MethodSpec {
  Method method = Method::A_Points;
  bool uses_geonames = false;
  bool uses_graph = false;
  bool uses_fuzzy = false;

  static MethodSpec of(Method m);
  nn::Architecture architecture() const {
    return uses_graph ? nn::Architecture::GCN : nn::Architecture::MLP;
  }
};

char method_letter(Method m);
std::string_view method_name(Method m);
/// Accepts "A".."F" (case-insensitive). Throws ConfigError otherwise.
Method parse_method(std::string_view text);

struct TrainConfig {
  std::size_t epochs = 500;
  std::vector<double> lr_grid{1e-2, 3e-3, 1e-3, 3e-4};
  std::size_t batch_roots = 256;   // graph methods: labelled roots per batch
  std::size_t batch_points = 512;  // point methods: clusters per batch
  std::uint64_t seed = 0;
  Fanouts fanouts;
  nn::AdamWConfig adamw;  // lr is overridden by each grid entry
  nn::ModelShape shape;
  std::size_t knn = 8;
  double threshold_km = 100.0;
  DisplacementModel displacement;
  /// Standardise each embedding dimension with the mean/sd over the whole
  /// embedding table. Off by default: embeddings are used as-is.
  bool normalize_inputs = false;

  void validate() const;
  static TrainConfig from_config(const KeyValueConfig& cfg);
  std::string to_config_text() const;
};

struct LrTrial {
  double lr = 0.0;
  std::size_t best_epoch = 0;  // 1-based
  double best_val_loss = 0.0;
  double final_val_loss = 0.0;
  std::vector<double> val_curve;
};

/// Outcome of training one method on one fold.
struct RunResult {
  Method method = Method::A_Points;
  std::size_t fold_index = 0;  // 0-based
  double lr = 0.0;             // selected learning rate
  nn::ModelParams params;      // best-validation checkpoint for `lr`
  std::vector<LrTrial> trials;
  Metrics test;
  std::vector<double> test_pred;
  std::vector<double> test_target;

  const LrTrial& selected() const;
};

struct EvalReport {
  Method method = Method::A_Points;
  std::vector<RunResult> folds;
  Summary mae;
  Summary r2;
};

/// Trains `method` on fold `fold_index` of `plan` for every learning rate in
/// the grid, keeps the best-validation-epoch parameters of each, selects the
/// lr with the lowest best validation loss (ties to the smaller lr) and
/// reports MAE/R^2 on the test group at reported cluster coordinates.
RunResult run_method(Method method, const Dataset& data, const FoldPlan& plan,
                     std::size_t fold_index, const TrainConfig& config);

/// run_method over every (method, fold); `jobs` > 1 runs them on worker
/// threads with results identical to a serial run.
std::vector<EvalReport> cross_validate(std::span<const Method> methods, const Dataset& data,
                                       const FoldPlan& plan, const TrainConfig& config,
                                       std::size_t jobs = 1);

/// `fold,method,lr,mae,r2` rows per fold, then `mean` and `sd` rows per
/// method.
void write_report_csv(const std::string& path, std::span<const EvalReport> reports);
std::string report_csv(std::span<const EvalReport> reports);

/// Model output at every cluster's reported coordinate (P-weighted candidate
/// mean for fuzzy methods), full graph, no sampling.
std::vector<double> predict_clusters(const nn::ModelParams& params, Method method,
                                     const Dataset& data, const TrainConfig& config);

struct SettlementPrediction {
  std::string key;
  GeoPoint location;
  double iwi_pred = 0.0;
};

/// Full-graph prediction for every settlement, in settlement order.
std::vector<SettlementPrediction> predict_map(const nn::ModelParams& params, Method method,
                                              const Dataset& data, const TrainConfig& config);

}  // namespace geowealth

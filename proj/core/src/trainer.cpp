#include "geowealth/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "geowealth/csv.hpp"
#include "geowealth/error.hpp"
#include "geowealth/graph.hpp"
#include "geowealth/losses.hpp"

namespace geowealth {

using nn::Matrix;
using nn::ModelParams;

// ---------------------------------------------------------------------------
// Method metadata

MethodSpec MethodSpec::of(Method m) {
  switch (m) {
    case Method::A_Points:
      return {m, false, false, false};
    case Method::B_DhsGraph:
      return {m, false, true, false};
    case Method::C_FullGraph:
      return {m, true, true, false};
    case Method::D_EgoGraphs:
      return {m, true, true, false};
    case Method::E_PointsFuzzy:
      return {m, true, false, true};
    case Method::F_GraphFuzzy:
      return {m, true, true, true};
  }
  throw ConfigError("unknown method");
}

char method_letter(Method m) { return static_cast<char>('A' + static_cast<int>(m)); }

std::string_view method_name(Method m) {
  switch (m) {
    case Method::A_Points:
      return "DHS points";
    case Method::B_DhsGraph:
      return "DHS graph";
    case Method::C_FullGraph:
      return "Full graph";
    case Method::D_EgoGraphs:
      return "Ego graphs";
    case Method::E_PointsFuzzy:
      return "Points w. fuzzy";
    case Method::F_GraphFuzzy:
      return "Graph w. fuzzy";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text.size() == 1) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    if (c >= 'A' && c <= 'F') return static_cast<Method>(c - 'A');
  }
  throw ConfigError("unknown method '" + std::string(text) + "' (expected one of A-F)");
}

// ---------------------------------------------------------------------------
// Configuration

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (lr_grid.empty()) throw ConfigError("lr_grid must not be empty");
  for (double lr : lr_grid) {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rates must be positive");
  }
  if (batch_roots < 1 || batch_points < 1) throw ConfigError("batch sizes must be >= 1");
  if (fanouts.hop1 < 1) throw ConfigError("first-hop fanout must be >= 1");
  if (knn < 1) throw ConfigError("knn must be >= 1");
  if (!(threshold_km > 0.0)) throw ConfigError("threshold_km must be positive");
  if (shape.input_dim < 1 || shape.hidden_dim < 1 || shape.output_dim != 1) {
    throw ConfigError("model shape must have positive widths and a scalar output");
  }
  if (!(adamw.beta1 >= 0.0 && adamw.beta1 < 1.0 && adamw.beta2 >= 0.0 && adamw.beta2 < 1.0)) {
    throw ConfigError("AdamW betas must lie in [0, 1)");
  }
  if (!(adamw.eps > 0.0) || !(adamw.weight_decay >= 0.0)) {
    throw ConfigError("AdamW eps must be > 0 and weight_decay >= 0");
  }
  displacement.validate();
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& cfg) {
  TrainConfig c;
  c.epochs = cfg.get_uint("epochs", c.epochs);
  c.lr_grid = cfg.get_double_list("lr_grid", c.lr_grid);
  c.batch_roots = cfg.get_uint("batch_roots", c.batch_roots);
  c.batch_points = cfg.get_uint("batch_points", c.batch_points);
  c.seed = cfg.get_uint("seed", c.seed);
  c.fanouts.hop1 = cfg.get_uint("fanout1", c.fanouts.hop1);
  c.fanouts.hop2 = cfg.get_uint("fanout2", c.fanouts.hop2);
  c.adamw.beta1 = cfg.get_double("beta1", c.adamw.beta1);
  c.adamw.beta2 = cfg.get_double("beta2", c.adamw.beta2);
  c.adamw.eps = cfg.get_double("eps", c.adamw.eps);
  c.adamw.weight_decay = cfg.get_double("weight_decay", c.adamw.weight_decay);
  c.shape.input_dim = cfg.get_uint("input_dim", c.shape.input_dim);
  c.shape.hidden_dim = cfg.get_uint("hidden_dim", c.shape.hidden_dim);
  c.knn = cfg.get_uint("knn", c.knn);
  c.threshold_km = cfg.get_double("threshold_km", c.threshold_km);
  c.normalize_inputs = cfg.get_bool("normalize_inputs", c.normalize_inputs);
  c.displacement.urban_max = cfg.get_double("urban_max_km", c.displacement.urban_max);
  c.displacement.rural_common_max =
      cfg.get_double("rural_common_max_km", c.displacement.rural_common_max);
  c.displacement.rural_rare_max = cfg.get_double("rural_rare_max_km", c.displacement.rural_rare_max);
  c.displacement.rural_rare_prob = cfg.get_double("rural_rare_prob", c.displacement.rural_rare_prob);
  return c;
}

std::string TrainConfig::to_config_text() const {
  std::ostringstream out;
  std::string grid;
  for (double lr : lr_grid) grid += (grid.empty() ? "" : ",") + csv::format_double(lr);
  out << "epochs = " << epochs << '\n'
      << "lr_grid = " << grid << '\n'
      << "batch_roots = " << batch_roots << '\n'
      << "batch_points = " << batch_points << '\n'
      << "seed = " << seed << '\n'
      << "fanout1 = " << fanouts.hop1 << '\n'
      << "fanout2 = " << fanouts.hop2 << '\n'
      << "beta1 = " << csv::format_double(adamw.beta1) << '\n'
      << "beta2 = " << csv::format_double(adamw.beta2) << '\n'
      << "eps = " << csv::format_double(adamw.eps) << '\n'
      << "weight_decay = " << csv::format_double(adamw.weight_decay) << '\n'
      << "input_dim = " << shape.input_dim << '\n'
      << "hidden_dim = " << shape.hidden_dim << '\n'
      << "knn = " << knn << '\n'
      << "threshold_km = " << csv::format_double(threshold_km) << '\n'
      << "normalize_inputs = " << (normalize_inputs ? "true" : "false") << '\n'
      << "urban_max_km = " << csv::format_double(displacement.urban_max) << '\n'
      << "rural_common_max_km = " << csv::format_double(displacement.rural_common_max) << '\n'
      << "rural_rare_max_km = " << csv::format_double(displacement.rural_rare_max) << '\n'
      << "rural_rare_prob = " << csv::format_double(displacement.rural_rare_prob) << '\n';
  return out.str();
}

const LrTrial& RunResult::selected() const {
  for (const auto& t : trials) {
    if (t.lr == lr) return t;
  }
  throw Error("run has no trial for the selected learning rate");
}

namespace {

// ---------------------------------------------------------------------------
// Feature handling

class FeatureScaler {
 public:
  FeatureScaler(const EmbeddingTable& table, bool enabled) : enabled_(enabled) {
    if (!enabled_ || table.size() == 0) return;
    const auto dim = static_cast<Eigen::Index>(table.dim());
    mean_ = nn::RowVector::Zero(dim);
    nn::RowVector sq = nn::RowVector::Zero(dim);
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto row = table.row(i);
      for (Eigen::Index d = 0; d < dim; ++d) mean_[d] += row[static_cast<std::size_t>(d)];
    }
    mean_ /= static_cast<double>(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto row = table.row(i);
      for (Eigen::Index d = 0; d < dim; ++d) {
        const double c = row[static_cast<std::size_t>(d)] - mean_[d];
        sq[d] += c * c;
      }
    }
    inv_sd_ = nn::RowVector(dim);
    for (Eigen::Index d = 0; d < dim; ++d) {
      const double sd = std::sqrt(sq[d] / static_cast<double>(table.size()));
      inv_sd_[d] = sd > 0.0 ? 1.0 / sd : 1.0;
    }
  }

  Matrix features(std::span<const Node> nodes) const {
    std::vector<std::vector<double>> rows;
    rows.reserve(nodes.size());
    for (const auto& n : nodes) rows.push_back(n.embedding);
    Matrix x = nn::stack_rows(rows);
    if (enabled_ && x.rows() > 0) {
      x.rowwise() -= mean_;
      x.array().rowwise() *= inv_sd_.array();
    }
    return x;
  }

 private:
  bool enabled_;
  nn::RowVector mean_;
  nn::RowVector inv_sd_;
};

Matrix gather(const Matrix& features, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

std::vector<double> column(const Matrix& out) {
  return std::vector<double>(out.data(), out.data() + out.rows());
}

std::vector<double> labels_of(const Dataset& data, std::span<const std::size_t> clusters) {
  std::vector<double> y;
  y.reserve(clusters.size());
  for (std::size_t j : clusters) y.push_back(data.clusters[j].iwi);
  return y;
}

void check_architecture(const ModelParams& params, Method method) {
  const auto want = MethodSpec::of(method).architecture();
  if (params.arch != want) {
    throw ConfigError("method " + std::string(1, method_letter(method)) + " needs " +
                      std::string(nn::to_string(want)) + " parameters, got " +
                      std::string(nn::to_string(params.arch)));
  }
}

// Candidate sub-problem of a set of fuzzy assignments, re-indexed onto the
// sorted union of their candidate nodes.
struct LocalFuzzy {
  std::vector<std::size_t> nodes;  // global ids, ascending
  std::vector<FuzzyAssignment> assignments;
  std::vector<double> labels;
};

LocalFuzzy localize(std::span<const FuzzyAssignment> all, std::span<const double> labels,
                    std::span<const std::size_t> clusters) {
  LocalFuzzy out;
  for (std::size_t j : clusters) {
    for (const auto& c : all[j].candidates) out.nodes.push_back(c.node);
  }
  std::sort(out.nodes.begin(), out.nodes.end());
  out.nodes.erase(std::unique(out.nodes.begin(), out.nodes.end()), out.nodes.end());
  std::unordered_map<std::size_t, std::size_t> local;
  for (std::size_t i = 0; i < out.nodes.size(); ++i) local.emplace(out.nodes[i], i);
  for (std::size_t b = 0; b < clusters.size(); ++b) {
    FuzzyAssignment a;
    a.label_index = b;
    for (const auto& c : all[clusters[b]].candidates) {
      a.candidates.push_back(FuzzyCandidate{local.at(c.node), c.probability});
    }
    out.assignments.push_back(std::move(a));
    out.labels.push_back(labels[clusters[b]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-method training problems. Each is built once over every cluster and is
// read-only afterwards, so folds can share it across threads.

class Task {
 public:
  virtual ~Task() = default;
  virtual nn::Architecture arch() const = 0;
  virtual std::size_t batch_size(const TrainConfig& c) const = 0;
  /// Mean loss over the batch of clusters; writes parameter gradients.
  virtual double batch_grad(const ModelParams& params, std::span<const std::size_t> clusters,
                            Rng& rng, ModelParams& grads) const = 0;
  virtual double val_loss(const ModelParams& params,
                          std::span<const std::size_t> clusters) const = 0;
  virtual std::vector<double> predict(const ModelParams& params,
                                      std::span<const std::size_t> clusters) const = 0;
};

double mse_backprop(const ModelParams& params, const Matrix& x, const nn::Propagation* prop,
                    std::span<const std::size_t> output_rows, std::span<const double> targets,
                    ModelParams& grads) {
  nn::Tape tape;
  const Matrix out = nn::forward(params, x, prop, &tape);
  std::vector<double> pred;
  pred.reserve(output_rows.size());
  for (std::size_t r : output_rows) pred.push_back(out(static_cast<Eigen::Index>(r), 0));
  const auto loss = nn::mse_loss(pred, targets);
  Matrix d_out = Matrix::Zero(out.rows(), 1);
  for (std::size_t i = 0; i < output_rows.size(); ++i) {
    d_out(static_cast<Eigen::Index>(output_rows[i]), 0) += loss.grad[i];
  }
  nn::backward(params, tape, prop, d_out, grads);
  return loss.loss;
}

class PointsTask final : public Task {
 public:
  PointsTask(const Dataset& data, const FeatureScaler& scaler) : data_(data) {
    std::vector<Node> nodes;
    nodes.reserve(data.clusters.size());
    for (const auto& c : data.clusters) nodes.push_back(cluster_node(c, data.embeddings));
    features_ = scaler.features(nodes);
  }
  nn::Architecture arch() const override { return nn::Architecture::MLP; }
  std::size_t batch_size(const TrainConfig& c) const override { return c.batch_points; }

  double batch_grad(const ModelParams& params, std::span<const std::size_t> clusters, Rng&,
                    ModelParams& grads) const override {
    std::vector<std::size_t> rows(clusters.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return mse_backprop(params, gather(features_, clusters), nullptr, rows,
                        labels_of(data_, clusters), grads);
  }
  double val_loss(const ModelParams& params, std::span<const std::size_t> clusters) const override {
    return nn::mse_loss(predict(params, clusters), labels_of(data_, clusters)).loss;
  }
  std::vector<double> predict(const ModelParams& params,
                              std::span<const std::size_t> clusters) const override {
    return column(nn::mlp_forward(params, gather(features_, clusters)));
  }

 private:
  const Dataset& data_;
  Matrix features_;
};

// Methods B and C: clusters occupy the first nodes of the graph.
class GraphTask final : public Task {
 public:
  GraphTask(const Dataset& data, SpatialGraph graph, const FeatureScaler& scaler,
            const TrainConfig& config)
      : data_(data),
        graph_(std::move(graph)),
        features_(scaler.features(graph_.nodes)),
        full_(graph_.adjacency),
        fanouts_(config.fanouts) {}
  nn::Architecture arch() const override { return nn::Architecture::GCN; }
  std::size_t batch_size(const TrainConfig& c) const override { return c.batch_roots; }

  double batch_grad(const ModelParams& params, std::span<const std::size_t> clusters, Rng& rng,
                    ModelParams& grads) const override {
    const auto batch = sample_neighborhood(graph_.adjacency, clusters, fanouts_, rng);
    const nn::Propagation prop(batch.adjacency);
    return mse_backprop(params, gather(features_, batch.node_indices), &prop,
                        batch.root_local_ids, labels_of(data_, clusters), grads);
  }
  double val_loss(const ModelParams& params, std::span<const std::size_t> clusters) const override {
    return nn::mse_loss(predict(params, clusters), labels_of(data_, clusters)).loss;
  }
  std::vector<double> predict(const ModelParams& params,
                              std::span<const std::size_t> clusters) const override {
    const Matrix out = nn::gcn_forward(params, features_, full_);
    std::vector<double> pred;
    pred.reserve(clusters.size());
    for (std::size_t j : clusters) pred.push_back(out(static_cast<Eigen::Index>(j), 0));
    return pred;
  }

 private:
  const Dataset& data_;
  SpatialGraph graph_;
  Matrix features_;
  nn::Propagation full_;
  Fanouts fanouts_;
};

class EgoTask final : public Task {
 public:
  EgoTask(const Dataset& data, std::vector<SpatialGraph> egos, const FeatureScaler& scaler)
      : data_(data), egos_(std::move(egos)), offsets_(ego_offsets(egos_)) {
    std::vector<Node> all;
    all.reserve(offsets_.back());
    for (const auto& g : egos_) all.insert(all.end(), g.nodes.begin(), g.nodes.end());
    features_ = scaler.features(all);
  }
  nn::Architecture arch() const override { return nn::Architecture::GCN; }
  std::size_t batch_size(const TrainConfig& c) const override { return c.batch_roots; }

  double batch_grad(const ModelParams& params, std::span<const std::size_t> clusters, Rng&,
                    ModelParams& grads) const override {
    const auto batch = union_ego_graphs(egos_, offsets_, clusters);
    const nn::Propagation prop(batch.adjacency);
    return mse_backprop(params, gather(features_, batch.node_indices), &prop,
                        batch.root_local_ids, labels_of(data_, clusters), grads);
  }
  double val_loss(const ModelParams& params, std::span<const std::size_t> clusters) const override {
    return nn::mse_loss(predict(params, clusters), labels_of(data_, clusters)).loss;
  }
  std::vector<double> predict(const ModelParams& params,
                              std::span<const std::size_t> clusters) const override {
    const auto batch = union_ego_graphs(egos_, offsets_, clusters);
    const nn::Propagation prop(batch.adjacency);
    const Matrix out = nn::gcn_forward(params, gather(features_, batch.node_indices), prop);
    std::vector<double> pred;
    pred.reserve(clusters.size());
    for (std::size_t r : batch.root_local_ids) pred.push_back(out(static_cast<Eigen::Index>(r), 0));
    return pred;
  }

 private:
  const Dataset& data_;
  std::vector<SpatialGraph> egos_;
  std::vector<std::size_t> offsets_;
  Matrix features_;
};

class FuzzyPointsTask final : public Task {
 public:
  FuzzyPointsTask(FuzzyProblem problem, const FeatureScaler& scaler)
      : problem_(std::move(problem)), features_(scaler.features(problem_.nodes)) {}
  nn::Architecture arch() const override { return nn::Architecture::MLP; }
  std::size_t batch_size(const TrainConfig& c) const override { return c.batch_points; }

  double batch_grad(const ModelParams& params, std::span<const std::size_t> clusters, Rng&,
                    ModelParams& grads) const override {
    const auto local = localize(problem_.assignments, problem_.labels, clusters);
    nn::Tape tape;
    const Matrix out = nn::mlp_forward(params, gather(features_, local.nodes), &tape);
    const auto loss = nn::fuzzy_loss(column(out), local.assignments, local.labels);
    const Matrix d_out = Eigen::Map<const Matrix>(loss.grad.data(), out.rows(), 1);
    nn::backward(params, tape, nullptr, d_out, grads);
    return loss.loss;
  }
  double val_loss(const ModelParams& params, std::span<const std::size_t> clusters) const override {
    const auto local = localize(problem_.assignments, problem_.labels, clusters);
    const Matrix out = nn::mlp_forward(params, gather(features_, local.nodes));
    return nn::fuzzy_loss(column(out), local.assignments, local.labels).loss;
  }
  std::vector<double> predict(const ModelParams& params,
                              std::span<const std::size_t> clusters) const override {
    const auto local = localize(problem_.assignments, problem_.labels, clusters);
    const Matrix out = nn::mlp_forward(params, gather(features_, local.nodes));
    return nn::fuzzy_expectation(column(out), local.assignments);
  }

 private:
  FuzzyProblem problem_;
  Matrix features_;
};

class FuzzyGraphTask final : public Task {
 public:
  FuzzyGraphTask(FuzzyGraph fg, const FeatureScaler& scaler, const TrainConfig& config)
      : fg_(std::move(fg)),
        features_(scaler.features(fg_.graph.nodes)),
        full_(fg_.graph.adjacency),
        fanouts_(config.fanouts) {}
  nn::Architecture arch() const override { return nn::Architecture::GCN; }
  std::size_t batch_size(const TrainConfig& c) const override { return c.batch_roots; }

  double batch_grad(const ModelParams& params, std::span<const std::size_t> clusters, Rng& rng,
                    ModelParams& grads) const override {
    // Roots are the candidate nodes of the batch's clusters.
    auto local = localize(fg_.assignments, fg_.labels, clusters);
    const auto batch = sample_neighborhood(fg_.graph.adjacency, local.nodes, fanouts_, rng);
    for (auto& a : local.assignments) {
      for (auto& c : a.candidates) c.node = batch.root_local_ids[c.node];
    }
    const nn::Propagation prop(batch.adjacency);
    nn::Tape tape;
    const Matrix out = nn::gcn_forward(params, gather(features_, batch.node_indices), prop, &tape);
    const auto loss = nn::fuzzy_loss(column(out), local.assignments, local.labels);
    const Matrix d_out = Eigen::Map<const Matrix>(loss.grad.data(), out.rows(), 1);
    nn::backward(params, tape, &prop, d_out, grads);
    return loss.loss;
  }
  double val_loss(const ModelParams& params, std::span<const std::size_t> clusters) const override {
    const Matrix out = nn::gcn_forward(params, features_, full_);
    return nn::fuzzy_loss(column(out), subset(clusters), fg_.labels).loss;
  }
  std::vector<double> predict(const ModelParams& params,
                              std::span<const std::size_t> clusters) const override {
    const Matrix out = nn::gcn_forward(params, features_, full_);
    return nn::fuzzy_expectation(column(out), subset(clusters));
  }

 private:
  std::vector<FuzzyAssignment> subset(std::span<const std::size_t> clusters) const {
    std::vector<FuzzyAssignment> out;
    out.reserve(clusters.size());
    for (std::size_t j : clusters) out.push_back(fg_.assignments[j]);
    return out;
  }

  FuzzyGraph fg_;
  Matrix features_;
  nn::Propagation full_;
  Fanouts fanouts_;
};

void check_data(Method method, const Dataset& data) {
  if (data.clusters.empty()) throw ConfigError("no survey clusters to train on");
  if (data.embeddings.dim() != kEmbeddingDim && data.embeddings.dim() == 0) {
    throw ConfigError("embedding table is empty");
  }
  if (MethodSpec::of(method).uses_geonames && data.settlements.empty()) {
    throw ConfigError("method " + std::string(1, method_letter(method)) +
                      " needs settlement locations");
  }
}

std::unique_ptr<Task> make_task(Method method, const Dataset& data, const TrainConfig& config) {
  check_data(method, data);
  if (data.embeddings.dim() != config.shape.input_dim) {
    throw ConfigError("embedding dimension " + std::to_string(data.embeddings.dim()) +
                      " does not match model input_dim " + std::to_string(config.shape.input_dim));
  }
  const FeatureScaler scaler(data.embeddings, config.normalize_inputs);
  switch (method) {
    case Method::A_Points:
      return std::make_unique<PointsTask>(data, scaler);
    case Method::B_DhsGraph:
      return std::make_unique<GraphTask>(
          data, build_dhs_graph(data.clusters, data.embeddings, config.threshold_km), scaler,
          config);
    case Method::C_FullGraph:
      return std::make_unique<GraphTask>(
          data,
          build_full_graph(data.clusters, data.settlements, data.embeddings, config.knn,
                           config.threshold_km),
          scaler, config);
    case Method::D_EgoGraphs:
      return std::make_unique<EgoTask>(
          data,
          build_ego_graphs(data.clusters, data.settlements, data.embeddings, config.displacement),
          scaler);
    case Method::E_PointsFuzzy:
      return std::make_unique<FuzzyPointsTask>(
          build_fuzzy_assignments(data.clusters, data.settlements, data.embeddings,
                                  config.displacement),
          scaler);
    case Method::F_GraphFuzzy:
      return std::make_unique<FuzzyGraphTask>(
          build_fuzzy_graph(data.clusters, data.settlements, data.embeddings, config.displacement,
                            config.knn, config.threshold_km),
          scaler, config);
  }
  throw ConfigError("unknown method");
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

Split split_clusters(const Dataset& data, const FoldPlan& plan, std::size_t fold_index) {
  plan.validate();
  if (fold_index >= plan.folds.size()) {
    throw ConfigError("fold " + std::to_string(fold_index + 1) + " does not exist (plan has " +
                      std::to_string(plan.folds.size()) + ")");
  }
  const Fold& fold = plan.folds[fold_index];
  std::unordered_map<std::string, std::string> group_of;
  for (const auto& [name, members] : plan.groups) {
    for (const auto& s : members) group_of.emplace(s, name);
  }
  Split split;
  for (std::size_t j = 0; j < data.clusters.size(); ++j) {
    const auto it = group_of.find(data.clusters[j].survey_id);
    if (it == group_of.end()) {
      throw ConfigError("survey '" + data.clusters[j].survey_id + "' is not in the fold plan");
    }
    const std::string& g = it->second;
    if (g == fold.test_group) {
      split.test.push_back(j);
    } else if (g == fold.val_group) {
      split.val.push_back(j);
    } else {
      split.train.push_back(j);
    }
  }
  if (split.train.empty() || split.val.empty() || split.test.empty()) {
    throw ConfigError("fold " + std::to_string(fold_index + 1) +
                      " has an empty train, validation or test set");
  }
  return split;
}

RunResult run_with_task(const Task& task, Method method, const Dataset& data,
                        const FoldPlan& plan, std::size_t fold_index, const TrainConfig& config) {
  const Split split = split_clusters(data, plan, fold_index);
  const Rng run_rng =
      Rng(config.seed).split(static_cast<std::uint64_t>(method) * 1000003ULL + fold_index);
  Rng init_rng = run_rng.split(1);
  const ModelParams initial = nn::init_params(task.arch(), config.shape, init_rng);

  RunResult result;
  result.method = method;
  result.fold_index = fold_index;
  const std::size_t batch = task.batch_size(config);
  std::optional<std::size_t> chosen;
  std::vector<ModelParams> best_params(config.lr_grid.size());

  for (std::size_t li = 0; li < config.lr_grid.size(); ++li) {
    LrTrial trial;
    trial.lr = config.lr_grid[li];
    trial.best_val_loss = std::numeric_limits<double>::infinity();
    nn::AdamWConfig opt = config.adamw;
    opt.lr = trial.lr;
    ModelParams params = initial;
    ModelParams grads = params.zeros_like();
    nn::AdamWState state(params, opt);
    // Every lr sees the same batch sequence.
    Rng batch_rng = run_rng.split(2);
    std::vector<std::size_t> order = split.train;
    try {
      for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        batch_rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += batch) {
          const std::size_t len = std::min(batch, order.size() - start);
          task.batch_grad(params, std::span<const std::size_t>(order).subspan(start, len),
                          batch_rng, grads);
          nn::adamw_step(params, grads, state);
        }
        const double v = task.val_loss(params, split.val);
        trial.val_curve.push_back(v);
        if (v < trial.best_val_loss) {
          trial.best_val_loss = v;
          trial.best_epoch = epoch;
          best_params[li] = params;
        }
      }
    } catch (const NonFiniteError&) {
      // Diverged; keep whatever checkpoint was reached before the blow-up.
      trial.val_curve.push_back(std::numeric_limits<double>::infinity());
    }
    trial.final_val_loss = trial.val_curve.back();
    if (trial.best_epoch > 0) {
      const auto& cur = result.trials;
      if (!chosen || trial.best_val_loss < cur[*chosen].best_val_loss ||
          (trial.best_val_loss == cur[*chosen].best_val_loss && trial.lr < cur[*chosen].lr)) {
        chosen = li;
      }
    }
    result.trials.push_back(std::move(trial));
  }
  if (!chosen) throw Error("training diverged for every learning rate");

  result.lr = result.trials[*chosen].lr;
  result.params = std::move(best_params[*chosen]);
  result.test_pred = task.predict(result.params, split.test);
  result.test_target = labels_of(data, split.test);
  result.test = evaluate(result.test_pred, result.test_target);
  return result;
}

}  // namespace

RunResult run_method(Method method, const Dataset& data, const FoldPlan& plan,
                     std::size_t fold_index, const TrainConfig& config) {
  config.validate();
  const auto task = make_task(method, data, config);
  return run_with_task(*task, method, data, plan, fold_index, config);
}

std::vector<EvalReport> cross_validate(std::span<const Method> methods, const Dataset& data,
                                       const FoldPlan& plan, const TrainConfig& config,
                                       std::size_t jobs) {
  config.validate();
  plan.validate();
  std::vector<std::unique_ptr<Task>> tasks;
  for (Method m : methods) tasks.push_back(make_task(m, data, config));

  const std::size_t n_folds = plan.folds.size();
  const std::size_t n_runs = methods.size() * n_folds;
  std::vector<std::optional<RunResult>> runs(n_runs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= n_runs) return;
      try {
        const std::size_t mi = r / n_folds;
        runs[r] = run_with_task(*tasks[mi], methods[mi], data, plan, r % n_folds, config);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_runs;
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, n_runs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<EvalReport> reports;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    EvalReport rep;
    rep.method = methods[mi];
    std::vector<double> maes;
    std::vector<double> r2s;
    for (std::size_t f = 0; f < n_folds; ++f) {
      rep.folds.push_back(std::move(*runs[mi * n_folds + f]));
      maes.push_back(rep.folds.back().test.mae);
      r2s.push_back(rep.folds.back().test.r2);
    }
    rep.mae = summarize(maes);
    rep.r2 = summarize(r2s);
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::string report_csv(std::span<const EvalReport> reports) {
  std::ostringstream out;
  out << "fold,method,lr,mae,r2\n";
  for (const auto& rep : reports) {
    const char m = method_letter(rep.method);
    bool all_defined = true;
    for (const auto& f : rep.folds) {
      out << (f.fold_index + 1) << ',' << m << ',' << csv::format_double(f.lr) << ','
          << csv::format_double(f.test.mae) << ','
          << (f.test.r2_defined ? csv::format_double(f.test.r2) : std::string("undefined")) << '\n';
      all_defined = all_defined && f.test.r2_defined;
    }
    const auto r2 = [&](double v) {
      return all_defined ? csv::format_double(v) : std::string("undefined");
    };
    out << "mean," << m << ",," << csv::format_double(rep.mae.mean) << ',' << r2(rep.r2.mean) << '\n';
    out << "sd," << m << ",," << csv::format_double(rep.mae.sd) << ',' << r2(rep.r2.sd) << '\n';
  }
  return out.str();
}

void write_report_csv(const std::string& path, std::span<const EvalReport> reports) {
  auto out = csv::open_output(path);
  out << report_csv(reports);
  if (!out) throw Error("failed writing '" + path + "'");
}

std::vector<double> predict_clusters(const nn::ModelParams& params, Method method,
                                     const Dataset& data, const TrainConfig& config) {
  check_architecture(params, method);
  const auto task = make_task(method, data, config);
  std::vector<std::size_t> all(data.clusters.size());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
  return task->predict(params, all);
}

std::vector<SettlementPrediction> predict_map(const nn::ModelParams& params, Method method,
                                              const Dataset& data, const TrainConfig& config) {
  check_architecture(params, method);
  check_data(method, data);
  const FeatureScaler scaler(data.embeddings, config.normalize_inputs);
  const std::size_t n_settle = data.settlements.size();
  std::vector<double> pred;

  switch (method) {
    case Method::A_Points:
    case Method::E_PointsFuzzy: {
      std::vector<Node> nodes;
      nodes.reserve(n_settle);
      for (const auto& s : data.settlements) nodes.push_back(settlement_node(s, data.embeddings));
      pred = column(nn::mlp_forward(params, scaler.features(nodes)));
      break;
    }
    case Method::B_DhsGraph:
    case Method::C_FullGraph: {
      // Settlements need graph context, so both use the full graph at
      // inference time; settlements follow the clusters.
      const auto g = build_full_graph(data.clusters, data.settlements, data.embeddings, config.knn,
                                      config.threshold_km);
      const Matrix out = nn::gcn_forward(params, scaler.features(g.nodes), nn::Propagation(g.adjacency));
      pred.assign(out.data() + data.clusters.size(), out.data() + out.rows());
      break;
    }
    case Method::D_EgoGraphs: {
      // Each settlement is treated as a rural reported coordinate whose
      // candidates are the other settlements within the rural radius.
      std::vector<GeoPoint> points;
      for (const auto& s : data.settlements) points.push_back(s.location);
      const SpatialIndex index(std::move(points));
      const double radius = config.displacement.max_radius(ClusterType::Rural);
      std::vector<SpatialGraph> egos;
      egos.reserve(n_settle);
      for (std::size_t i = 0; i < n_settle; ++i) {
        SpatialGraph g;
        g.nodes.push_back(settlement_node(data.settlements[i], data.embeddings));
        std::vector<std::pair<std::size_t, double>> leaves;
        double total = 0.0;
        for (const auto& h : index.radius_query(data.settlements[i].location, radius)) {
          if (h.id == i) continue;
          const double l = likelihood(config.displacement, ClusterType::Rural, h.distance_km);
          leaves.emplace_back(h.id, l);
          total += l;
        }
        std::vector<WeightedEdge> edges;
        for (const auto& [id, l] : leaves) {
          g.nodes.push_back(settlement_node(data.settlements[id], data.embeddings));
          edges.push_back(WeightedEdge{0, g.nodes.size() - 1, l / total});
        }
        g.adjacency = Csr::from_undirected(g.nodes.size(), edges);
        egos.push_back(std::move(g));
      }
      const auto offsets = ego_offsets(egos);
      std::vector<std::size_t> all(n_settle);
      for (std::size_t i = 0; i < n_settle; ++i) all[i] = i;
      const auto batch = union_ego_graphs(egos, offsets, all);
      std::vector<Node> nodes;
      nodes.reserve(offsets.back());
      for (const auto& g : egos) nodes.insert(nodes.end(), g.nodes.begin(), g.nodes.end());
      const Matrix out =
          nn::gcn_forward(params, scaler.features(nodes), nn::Propagation(batch.adjacency));
      for (std::size_t r : batch.root_local_ids) pred.push_back(out(static_cast<Eigen::Index>(r), 0));
      break;
    }
    case Method::F_GraphFuzzy: {
      const auto fg = build_fuzzy_graph(data.clusters, data.settlements, data.embeddings,
                                        config.displacement, config.knn, config.threshold_km);
      const Matrix out = nn::gcn_forward(params, scaler.features(fg.graph.nodes),
                                         nn::Propagation(fg.graph.adjacency));
      pred.assign(out.data(), out.data() + n_settle);
      break;
    }
  }

  std::vector<SettlementPrediction> rows;
  rows.reserve(n_settle);
  for (std::size_t i = 0; i < n_settle; ++i) {
    rows.push_back(SettlementPrediction{data.settlements[i].settlement_id,
                                        data.settlements[i].location, pred[i]});
  }
  return rows;
}

}  // namespace geowealth

// Acceptance suite: one line per criterion, non-zero exit if any fails.
//   acceptance            run everything
//   acceptance 3 7        run selected criteria

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fixtures.hpp"
#include "geowealth/displacement.hpp"
#include "geowealth/folds.hpp"
#include "geowealth/gradcheck.hpp"
#include "geowealth/graph.hpp"
#include "geowealth/losses.hpp"
#include "geowealth/nn.hpp"
#include "geowealth/synthetic.hpp"
#include "geowealth/trainer.hpp"
#include "oracles.hpp"

using namespace geowealth;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1
Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  Rng rng(20240601);
  constexpr std::size_t kInstances = 3;
  std::ostringstream detail;
  bool pass = true;
  for (const auto arch : {nn::Architecture::MLP, nn::Architecture::GCN}) {
    for (const auto loss : {nn::LossKind::MSE, nn::LossKind::Fuzzy}) {
      double worst = 0.0;
      std::size_t min_checked = SIZE_MAX;
      for (std::size_t i = 0; i < kInstances; ++i) {
        auto problem = nn::random_gradcheck_problem(arch, loss, rng, 50);
        const auto r = nn::grad_check(problem.closure, problem.params, rng);
        worst = std::max(worst, r.max_relative_error);
        min_checked = std::min(min_checked, r.checked);
      }
      pass = pass && worst <= 1e-4 && min_checked >= 200;
      detail << nn::to_string(arch) << "/" << nn::to_string(loss) << "=" << fmt(worst) << " ";
    }
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < 60.0;
  detail << "(" << fmt(secs) << "s)";
  return {pass, detail.str()};
}

// 2
Outcome likelihood_normalization() {
  const DisplacementModel model;
  const double urban = oracle::radial_integral(
      [&](double d) { return likelihood(model, ClusterType::Urban, d); }, {model.urban_max});
  const double rural = oracle::radial_integral(
      [&](double d) { return likelihood(model, ClusterType::Rural, d); },
      {model.rural_common_max, model.rural_rare_max});
  const bool pass = std::abs(urban - 1.0) <= 1e-6 && std::abs(rural - 1.0) <= 1e-6;
  return {pass, "urban=" + fmt(urban) + " rural=" + fmt(rural)};
}

// 3
Outcome sampler_consistency() {
  const DisplacementModel model;
  Rng rng(7);
  std::vector<double> rural(100000);
  for (auto& d : rural) d = sample_displacement(model, ClusterType::Rural, rng).distance_km;
  const double ks = oracle::ks_statistic(rural, [](double d) {
    return 0.99 * std::min(d / 5.0, 1.0) + 0.01 * std::min(d / 10.0, 1.0);
  });
  double urban_max = 0.0;
  for (int i = 0; i < 100000; ++i) {
    urban_max = std::max(urban_max, sample_displacement(model, ClusterType::Urban, rng).distance_km);
  }
  const bool pass = ks <= 0.01 && urban_max <= 2.0;
  return {pass, "KS=" + fmt(ks) + " urban_max=" + fmt(urban_max)};
}

// 4
Outcome fuzzy_degeneracy() {
  Rng rng(4);
  double worst = 0.0;
  double worst_grad = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.below(200);
    std::vector<double> pred(n);
    std::vector<double> target(n);
    std::vector<FuzzyAssignment> assignments(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng.normal(50.0, 20.0);
      target[i] = rng.uniform(0.0, 100.0);
      assignments[i].label_index = i;
      assignments[i].candidates = {{i, 1.0}};
    }
    const auto a = nn::mse_loss(pred, target);
    const auto b = nn::fuzzy_loss(pred, assignments, target);
    worst = std::max(worst, std::abs(a.loss - b.loss));
    for (std::size_t i = 0; i < n; ++i) {
      worst_grad = std::max(worst_grad, std::abs(a.grad[i] - b.grad[i]));
    }
  }
  const bool pass = worst <= 1e-12 && worst_grad <= 1e-12;
  return {pass, "max|diff| loss=" + fmt(worst) + " grad=" + fmt(worst_grad)};
}

// 5
Outcome graph_oracles() {
  const auto t0 = Clock::now();
  Rng rng(5);
  const DisplacementModel model;
  std::string why;
  std::size_t max_nodes = 0;
  for (int inst = 0; inst < 20; ++inst) {
    fixture::WorldSpec spec;
    spec.clusters = 20 + rng.below(480);
    spec.settlements = 50 + rng.below(1450);
    spec.surveys = 1 + rng.below(4);
    spec.span_deg = rng.uniform(0.3, 3.0);
    const Dataset data = fixture::random_dataset(spec, rng);
    const std::size_t k = 1 + rng.below(10);
    const double thr = rng.uniform(5.0, 120.0);
    max_nodes = std::max(max_nodes, spec.clusters + spec.settlements);
    const std::string tag = "instance " + std::to_string(inst) + ": ";

    const auto b = build_dhs_graph(data.clusters, data.embeddings, thr);
    if (!oracle::same_edges(oracle::edges_of(b.adjacency), oracle::dhs_edges(data.clusters, thr),
                            1e-12, &why)) {
      return {false, tag + "B " + why};
    }

    const auto c = build_full_graph(data.clusters, data.settlements, data.embeddings, k, thr);
    if (!oracle::same_edges(oracle::edges_of(c.adjacency),
                            oracle::full_edges(data.clusters, data.settlements, k, thr), 1e-12,
                            &why)) {
      return {false, tag + "C " + why};
    }
    for (std::size_t i = 0; i < data.clusters.size(); ++i) {
      if (c.nodes[i].key != data.clusters[i].key()) return {false, tag + "C node order"};
    }
    for (std::size_t i = 0; i < data.settlements.size(); ++i) {
      if (c.nodes[data.clusters.size() + i].key != data.settlements[i].settlement_id) {
        return {false, tag + "C node order"};
      }
    }

    const auto egos = build_ego_graphs(data.clusters, data.settlements, data.embeddings, model);
    std::vector<std::vector<oracle::Candidate>> cands;
    for (const auto& cl : data.clusters) cands.push_back(oracle::candidates(cl, data.settlements, model));
    for (std::size_t j = 0; j < egos.size(); ++j) {
      const auto& g = egos[j];
      const auto& want = cands[j];
      if (g.nodes.size() != want.size() + 1 || g.nodes[0].key != data.clusters[j].key()) {
        return {false, tag + "D ego " + std::to_string(j) + " nodes"};
      }
      oracle::EdgeMap expect;
      for (std::size_t i = 0; i < want.size(); ++i) {
        if (g.nodes[i + 1].key != data.settlements[want[i].settlement].settlement_id) {
          return {false, tag + "D ego " + std::to_string(j) + " leaf order"};
        }
        expect[{0, i + 1}] = want[i].probability;
      }
      if (!oracle::same_edges(oracle::edges_of(g.adjacency), expect, 1e-12, &why)) {
        return {false, tag + "D ego " + std::to_string(j) + " " + why};
      }
    }

    const auto f = build_fuzzy_graph(data.clusters, data.settlements, data.embeddings, model, k, thr);
    std::vector<GeoPoint> pts;
    std::vector<std::string> keys;
    for (const auto& s : data.settlements) {
      pts.push_back(s.location);
      keys.push_back(s.settlement_id);
    }
    for (std::size_t j = 0; j < data.clusters.size(); ++j) {
      const auto& a = f.assignments[j];
      if (a.label_index != j || f.labels[j] != data.clusters[j].iwi) {
        return {false, tag + "F label " + std::to_string(j)};
      }
      if (cands[j].empty()) {
        if (a.candidates.size() != 1 || a.candidates[0].node != pts.size() ||
            a.candidates[0].probability != 1.0) {
          return {false, tag + "F phantom " + std::to_string(j)};
        }
        pts.push_back(data.clusters[j].reported);
        keys.push_back("phantom:" + data.clusters[j].key());
        continue;
      }
      if (a.candidates.size() != cands[j].size()) return {false, tag + "F candidates"};
      for (std::size_t i = 0; i < cands[j].size(); ++i) {
        if (a.candidates[i].node != cands[j][i].settlement ||
            std::abs(a.candidates[i].probability - cands[j][i].probability) > 1e-12) {
          return {false, tag + "F candidate " + std::to_string(j)};
        }
      }
    }
    if (f.graph.nodes.size() != pts.size()) return {false, tag + "F node count"};
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (f.graph.nodes[i].key != keys[i]) return {false, tag + "F node key"};
    }
    if (!oracle::same_edges(oracle::edges_of(f.graph.adjacency), oracle::knn_graph(pts, k, thr),
                            1e-12, &why)) {
      return {false, tag + "F " + why};
    }
  }
  const double secs = seconds_since(t0);
  return {secs < 120.0, "20 instances, up to " + std::to_string(max_nodes) + " nodes (" +
                            fmt(secs) + "s)"};
}

// 6
Outcome parameter_matching() {
  const auto mlp = nn::ModelParams::zeros(nn::Architecture::MLP).parameter_count();
  const auto gcn = nn::ModelParams::zeros(nn::Architecture::GCN).parameter_count();
  return {mlp == 24961 && gcn == 24961,
          "mlp=" + std::to_string(mlp) + " gcn=" + std::to_string(gcn)};
}

// 7
Outcome synthetic_recovery() {
  const auto t0 = Clock::now();
  SyntheticWorldConfig wc;
  wc.n_settlements = 5000;
  wc.n_clusters = 1500;
  wc.embed_noise_sigma = 0.05;
  wc.label_noise_sigma = 2.0;
  const SyntheticWorld world = generate_synthetic(wc);
  const Dataset data = world.dataset();
  std::vector<std::string> surveys;
  for (const auto& c : data.clusters) surveys.push_back(c.survey_id);
  const FoldPlan plan = random_fold_plan(surveys, 5, wc.seed);

  TrainConfig config;
  config.seed = wc.seed;
  config.epochs = 60;
  config.lr_grid = {1e-2, 3e-3};
  const Method methods[] = {Method::A_Points, Method::C_FullGraph, Method::D_EgoGraphs};
  const std::size_t jobs = std::max(1U, std::thread::hardware_concurrency());
  const auto reports = cross_validate(methods, data, plan, config, jobs);

  // Linear probe on the same train/test split of every fold.
  std::vector<double> probe;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto& fold = plan.folds[f];
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    for (std::size_t j = 0; j < data.clusters.size(); ++j) {
      const std::string g = plan.group_of(data.clusters[j].survey_id);
      if (g == fold.test_group) {
        test.push_back(j);
      } else if (g != fold.val_group) {
        train.push_back(j);
      }
    }
    auto design = [&](const std::vector<std::size_t>& rows, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
      x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(data.embeddings.dim()));
      y.resize(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto e = data.embeddings.at(data.clusters[rows[r]].key());
        for (std::size_t d = 0; d < e.size(); ++d) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = e[d];
        y[static_cast<Eigen::Index>(r)] = data.clusters[rows[r]].iwi;
      }
    };
    Eigen::MatrixXd xtr, xte;
    Eigen::VectorXd ytr, yte;
    design(train, xtr, ytr);
    design(test, xte, yte);
    probe.push_back(oracle::linear_probe_r2(xtr, ytr, xte, yte));
  }
  const double probe_mean = std::accumulate(probe.begin(), probe.end(), 0.0) / probe.size();
  const double a = reports[0].r2.mean;
  const double c = reports[1].r2.mean;
  const double d = reports[2].r2.mean;
  const double secs = seconds_since(t0);
  const bool pass = a >= 0.9 * probe_mean && c >= a - 0.05 && d >= a - 0.05;
  return {pass, "probe=" + fmt(probe_mean) + " A=" + fmt(a) + " C=" + fmt(c) + " D=" + fmt(d) +
                    " (" + fmt(secs) + "s, " + std::to_string(jobs) + " threads)"};
}

// 8
Outcome checkpointing() {
  Rng rng(8);
  Dataset data{{}, {}, EmbeddingTable(kEmbeddingDim)};
  std::vector<double> w(kEmbeddingDim);
  for (auto& v : w) v = rng.normal();
  auto add = [&](const std::string& survey, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      SurveyCluster c;
      c.survey_id = survey;
      c.cluster_id = std::to_string(i);
      c.reported = GeoPoint::make(rng.uniform(-1.0, 1.0), rng.uniform(30.0, 32.0));
      std::vector<double> e(kEmbeddingDim);
      double signal = 0.0;
      for (std::size_t k = 0; k < e.size(); ++k) {
        e[k] = rng.normal();
        signal += e[k] * w[k];
      }
      c.iwi = std::clamp(50.0 + 3.0 * signal + rng.normal(0.0, 15.0), 0.0, 100.0);
      data.embeddings.add(c.key(), e);
      data.clusters.push_back(c);
    }
  };
  add("train", 12);
  add("val", 200);
  add("test", 200);
  FoldPlan plan;
  plan.groups = {{"T", {"train"}}, {"V", {"val"}}, {"X", {"test"}}};
  plan.folds = {Fold{{"T"}, "V", "X"}};

  TrainConfig config;
  config.epochs = 500;
  config.lr_grid = {1e-3};
  const RunResult run = run_method(Method::A_Points, data, plan, 0, config);
  const LrTrial& t = run.selected();

  // Re-derive validation loss and test metrics from the returned parameters.
  const auto pred = predict_clusters(run.params, Method::A_Points, data, config);
  double val = 0.0;
  std::vector<double> test_pred, test_y;
  for (std::size_t j = 0; j < data.clusters.size(); ++j) {
    if (data.clusters[j].survey_id == "val") val += std::pow(pred[j] - data.clusters[j].iwi, 2);
    if (data.clusters[j].survey_id == "test") {
      test_pred.push_back(pred[j]);
      test_y.push_back(data.clusters[j].iwi);
    }
  }
  val /= 200.0;
  const Metrics m = evaluate(test_pred, test_y);
  const bool pass = t.best_epoch < config.epochs && t.best_val_loss < t.final_val_loss &&
                    std::abs(val - t.best_val_loss) <= 1e-9 * t.best_val_loss &&
                    m.mae == run.test.mae && m.r2 == run.test.r2 &&
                    t.val_curve[t.best_epoch - 1] == t.best_val_loss;
  return {pass, "best epoch " + std::to_string(t.best_epoch) + " val " + fmt(t.best_val_loss) +
                    " < final " + fmt(t.final_val_loss) + ", reported metrics match checkpoint"};
}

// 9
Outcome determinism() {
  SyntheticWorldConfig wc;
  wc.n_settlements = 800;
  wc.n_clusters = 250;
  wc.seed = 99;
  // Gazetteer holes so the fuzzy methods see phantom nodes (about 2-3 %).
  wc.settlement_dropout = 0.05;
  TrainConfig config;
  config.seed = 99;
  config.epochs = 4;
  config.lr_grid = {1e-2, 1e-3};
  config.batch_roots = 32;
  config.batch_points = 64;

  auto run = [&](std::size_t jobs) {
    const SyntheticWorld world = generate_synthetic(wc);
    const Dataset data = world.dataset();
    std::vector<std::string> surveys;
    for (const auto& c : data.clusters) surveys.push_back(c.survey_id);
    const FoldPlan plan = random_fold_plan(surveys, 5, config.seed);
    return report_csv(cross_validate(kAllMethods, data, plan, config, jobs));
  };
  const std::string first = run(1);
  const std::string second = run(3);
  const std::size_t rows = static_cast<std::size_t>(std::count(first.begin(), first.end(), '\n'));
  return {first == second, std::to_string(rows) + " report lines, methods A-F, " +
                               (first == second ? "identical" : "DIFFERENT")};
}

// 10
Outcome permutation_equivariance() {
  Rng rng(10);
  const nn::ModelShape shape{8, 16, 1};
  double worst = 0.0;
  for (int g = 0; g < 100; ++g) {
    const std::size_t n = 1 + rng.below(60);
    std::vector<WeightedEdge> edges;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        if (rng.bernoulli(4.0 / n)) edges.push_back({a, b, rng.uniform(0.01, 10.0)});
      }
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<WeightedEdge> permuted;
    for (const auto& e : edges) permuted.push_back({perm[e.src], perm[e.dst], e.weight});

    nn::Matrix x(static_cast<Eigen::Index>(n), 8);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    nn::Matrix xp(x.rows(), x.cols());
    for (std::size_t i = 0; i < n; ++i) xp.row(static_cast<Eigen::Index>(perm[i])) = x.row(static_cast<Eigen::Index>(i));

    const auto params = oracle::random_params(nn::Architecture::GCN, shape, rng);
    const nn::Matrix out = nn::gcn_forward(params, x, nn::Propagation(Csr::from_undirected(n, edges)));
    const nn::Matrix outp =
        nn::gcn_forward(params, xp, nn::Propagation(Csr::from_undirected(n, permuted)));
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(out(static_cast<Eigen::Index>(i), 0) -
                                       outp(static_cast<Eigen::Index>(perm[i]), 0)));
    }
  }
  return {worst <= 1e-10, "100 graphs, max|diff|=" + fmt(worst)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "gradient correctness", gradient_correctness},
      {2, "likelihood normalization", likelihood_normalization},
      {3, "sampler/mechanism consistency", sampler_consistency},
      {4, "fuzzy-loss degeneracy", fuzzy_degeneracy},
      {5, "graph-builder oracle equivalence", graph_oracles},
      {6, "parameter matching", parameter_matching},
      {7, "synthetic end-to-end recovery", synthetic_recovery},
      {8, "checkpointing", checkpointing},
      {9, "determinism", determinism},
      {10, "permutation equivariance", permutation_equivariance},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.contains(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << "  " << c.name << ": "
              << o.detail << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

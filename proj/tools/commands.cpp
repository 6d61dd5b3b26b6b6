#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "geowealth/checkpoint.hpp"
#include "geowealth/csv.hpp"
#include "geowealth/dataset.hpp"
#include "geowealth/error.hpp"
#include "geowealth/folds.hpp"
#include "geowealth/gradcheck.hpp"
#include "geowealth/graph.hpp"
#include "geowealth/kvconfig.hpp"
#include "geowealth/synthetic.hpp"
#include "geowealth/trainer.hpp"

namespace geowealth::cli {

namespace fs = std::filesystem;

namespace {

KeyValueConfig load_config(const std::string& path) {
  return path.empty() ? KeyValueConfig{} : KeyValueConfig::parse_file(path);
}

void echo_config(const std::string& text) {
  std::cout << "# resolved config\n";
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) std::cout << "#   " << line << '\n';
}

TrainConfig resolve_train_config(const KeyValueConfig& cfg) {
  TrainConfig config = TrainConfig::from_config(cfg);
  cfg.reject_unknown();
  config.validate();
  return config;
}

TrainConfig train_config(const TrainFlags& f) {
  KeyValueConfig cfg = load_config(f.config);
  if (f.seed) cfg.set("seed", std::to_string(*f.seed));
  if (f.epochs) cfg.set("epochs", std::to_string(*f.epochs));
  if (!f.lr_grid.empty()) cfg.set("lr_grid", f.lr_grid);
  return resolve_train_config(cfg);
}

Dataset load_dataset(const DataFlags& d, const TrainConfig& config) {
  Dataset data;
  data.clusters = load_clusters(d.clusters);
  if (!d.settlements.empty()) data.settlements = load_settlements(d.settlements);
  data.embeddings = load_embeddings(d.embeddings, config.shape.input_dim);
  return data;
}

std::vector<Method> parse_methods(const std::string& text) {
  if (text == "all") return {std::begin(kAllMethods), std::end(kAllMethods)};
  std::vector<Method> out;
  for (const auto part : csv::split(text)) {
    const Method m = parse_method(part);
    if (std::find(out.begin(), out.end(), m) != out.end()) {
      throw ConfigError("method " + std::string(part) + " listed twice");
    }
    out.push_back(m);
  }
  if (out.empty()) throw ConfigError("no methods given");
  return out;
}

FoldPlan fold_plan(const TrainFlags& f, const Dataset& data, const TrainConfig& config) {
  if (!f.folds.empty()) return load_fold_groups(f.folds);
  std::vector<std::string> ids;
  ids.reserve(data.clusters.size());
  for (const auto& c : data.clusters) ids.push_back(c.survey_id);
  return random_fold_plan(ids, f.groups, config.seed);
}

std::string method_list(const std::vector<Method>& methods) {
  std::string s;
  for (Method m : methods) s += (s.empty() ? "" : ",") + std::string(1, method_letter(m));
  return s;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::string& methods,
                    const TrainFlags& f, const TrainConfig& config) {
  auto out = csv::open_output((dir / "manifest.txt").string());
  out << "command = " << command << '\n'
      << "method = " << methods << '\n'
      << "clusters = " << f.data.clusters << '\n'
      << "settlements = " << f.data.settlements << '\n'
      << "embeddings = " << f.data.embeddings << '\n'
      << "folds = " << (f.folds.empty() ? std::string("random") : f.folds) << '\n'
      << "groups = " << f.groups << '\n';
  if (command == "train") out << "fold = " << f.fold << '\n';
  out << config.to_config_text();
  if (!out) throw Error("failed writing manifest.txt");
}

void write_curves(const fs::path& path, const RunResult& run) {
  auto out = csv::open_output(path.string());
  out << "lr,epoch,val_loss\n";
  for (const auto& t : run.trials) {
    for (std::size_t e = 0; e < t.val_curve.size(); ++e) {
      out << csv::format_double(t.lr) << ',' << (e + 1) << ','
          << csv::format_double(t.val_curve[e]) << '\n';
    }
  }
}

std::string r2_text(const Metrics& m) {
  return m.r2_defined ? csv::format_double(m.r2) : std::string("undefined");
}

}  // namespace

int run_synth(const SynthFlags& f) {
  KeyValueConfig cfg = load_config(f.config);
  if (f.seed) cfg.set("seed", std::to_string(*f.seed));
  const SyntheticWorldConfig config = SyntheticWorldConfig::from_config(cfg);
  cfg.reject_unknown();
  config.validate();
  echo_config(config.to_config_text());

  const SyntheticWorld world = generate_synthetic(config);
  write_synthetic(world, f.out);
  std::cout << "wrote " << world.settlements.size() << " settlements, "
            << world.clusters_reported.size() << " clusters, " << world.embeddings.size()
            << " embeddings to " << f.out << '\n';
  return 0;
}

int run_build_graph(const BuildGraphFlags& f) {
  const Method method = parse_method(f.method);
  if (method == Method::A_Points) throw ConfigError("method A does not use a graph");
  KeyValueConfig cfg = load_config(f.config);
  const TrainConfig config = resolve_train_config(cfg);
  echo_config(config.to_config_text());
  const Dataset data = load_dataset(f.data, config);
  if (data.settlements.empty() && method != Method::B_DhsGraph) {
    throw ConfigError("method " + f.method + " needs --settlements");
  }

  fs::create_directories(f.out);
  const fs::path dir(f.out);
  const auto nodes_path = (dir / "nodes.csv").string();
  const auto edges_path = (dir / "edges.csv").string();
  SpatialGraph graph;
  switch (method) {
    case Method::B_DhsGraph:
      graph = build_dhs_graph(data.clusters, data.embeddings, config.threshold_km);
      break;
    case Method::C_FullGraph:
      graph = build_full_graph(data.clusters, data.settlements, data.embeddings, config.knn,
                               config.threshold_km);
      break;
    case Method::D_EgoGraphs: {
      const auto egos =
          build_ego_graphs(data.clusters, data.settlements, data.embeddings, config.displacement);
      graph = disjoint_union(egos);
      break;
    }
    case Method::E_PointsFuzzy: {
      const auto problem = build_fuzzy_assignments(data.clusters, data.settlements,
                                                   data.embeddings, config.displacement);
      graph.nodes = problem.nodes;
      graph.adjacency = Csr::empty(graph.nodes.size());
      write_assignments(problem.assignments, problem.nodes, (dir / "assignments.csv").string());
      std::cout << "phantoms " << problem.phantom_count << '\n';
      break;
    }
    case Method::F_GraphFuzzy: {
      const auto fg = build_fuzzy_graph(data.clusters, data.settlements, data.embeddings,
                                        config.displacement, config.knn, config.threshold_km);
      graph = fg.graph;
      write_assignments(fg.assignments, fg.graph.nodes, (dir / "assignments.csv").string());
      std::cout << "phantoms " << fg.phantom_count << '\n';
      break;
    }
    case Method::A_Points:
      break;
  }
  write_graph_dump(graph, nodes_path, edges_path);
  std::cout << "nodes " << graph.nodes.size() << "\nedges " << graph.adjacency.num_entries() / 2
            << '\n';
  return 0;
}

int run_train(const TrainFlags& f) {
  const Method method = parse_method(f.method);
  const TrainConfig config = train_config(f);
  echo_config(config.to_config_text());
  const Dataset data = load_dataset(f.data, config);
  const FoldPlan plan = fold_plan(f, data, config);
  if (f.fold < 1 || f.fold > plan.folds.size()) {
    throw ConfigError("--fold must lie in 1.." + std::to_string(plan.folds.size()));
  }

  const RunResult run = run_method(method, data, plan, f.fold - 1, config);

  fs::create_directories(f.out);
  const fs::path dir(f.out);
  write_manifest(dir, "train", std::string(1, method_letter(method)), f, config);
  save_fold_groups((dir / "folds.csv").string(), plan);
  nn::save_params((dir / "model.bin").string(), run.params);
  write_curves(dir / "curves.csv", run);
  EvalReport report;
  report.method = method;
  report.folds.push_back(run);
  report.mae = summarize(std::vector<double>{run.test.mae});
  report.r2 = summarize(std::vector<double>{run.test.r2});
  write_report_csv((dir / "report.csv").string(), std::span<const EvalReport>(&report, 1));

  const auto& sel = run.selected();
  std::cout << "method " << method_letter(method) << " fold " << f.fold << " lr "
            << csv::format_double(run.lr) << " best_epoch " << sel.best_epoch << " val_loss "
            << csv::format_double(sel.best_val_loss) << " mae "
            << csv::format_double(run.test.mae) << " r2 " << r2_text(run.test) << '\n';
  return 0;
}

int run_cross_validate(const TrainFlags& f) {
  const std::vector<Method> methods = parse_methods(f.method);
  if (f.jobs < 1) throw ConfigError("--jobs must be >= 1");
  const TrainConfig config = train_config(f);
  echo_config(config.to_config_text());
  const Dataset data = load_dataset(f.data, config);
  const FoldPlan plan = fold_plan(f, data, config);

  const auto reports = cross_validate(methods, data, plan, config, f.jobs);

  fs::create_directories(f.out / fs::path("checkpoints"));
  const fs::path dir(f.out);
  write_manifest(dir, "cross-validate", method_list(methods), f, config);
  save_fold_groups((dir / "folds.csv").string(), plan);
  for (const auto& rep : reports) {
    for (const auto& run : rep.folds) {
      const std::string name = std::string("fold") + std::to_string(run.fold_index + 1) + "_" +
                               method_letter(rep.method) + ".bin";
      nn::save_params((dir / "checkpoints" / name).string(), run.params);
    }
  }
  write_report_csv((dir / "report.csv").string(), reports);

  for (const auto& rep : reports) {
    bool defined = true;
    for (const auto& run : rep.folds) defined = defined && run.test.r2_defined;
    std::cout << method_letter(rep.method) << "  " << method_name(rep.method) << "  mae "
              << csv::format_double(rep.mae.mean) << " +- " << csv::format_double(rep.mae.sd)
              << "  r2 "
              << (defined ? csv::format_double(rep.r2.mean) + " +- " + csv::format_double(rep.r2.sd)
                          : std::string("undefined"))
              << '\n';
  }
  return 0;
}

int run_predict(const PredictFlags& f) {
  const Method method = parse_method(f.method);
  KeyValueConfig cfg = load_config(f.config);
  const TrainConfig config = resolve_train_config(cfg);
  echo_config(config.to_config_text());
  const Dataset data = load_dataset(f.data, config);
  const nn::ModelParams params = nn::load_params(f.checkpoint);

  auto rows = predict_map(params, method, data, config);
  if (f.clip) {
    for (auto& r : rows) r.iwi_pred = std::clamp(r.iwi_pred, 0.0, 100.0);
  }

  if (const auto parent = fs::path(f.out).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  auto out = csv::open_output(f.out);
  if (f.format == "csv") {
    out << "settlement_id,lat,lon,iwi_pred\n";
    for (const auto& r : rows) {
      out << r.key << ',' << csv::format_double(r.location.lat) << ','
          << csv::format_double(r.location.lon) << ',' << csv::format_double(r.iwi_pred) << '\n';
    }
  } else {
    nlohmann::ordered_json features = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      features.push_back({{"type", "Feature"},
                          {"geometry",
                           {{"type", "Point"},
                            {"coordinates", {r.location.lon, r.location.lat}}}},
                          {"properties", {{"settlement_id", r.key}, {"iwi_pred", r.iwi_pred}}}});
    }
    nlohmann::ordered_json doc = {{"type", "FeatureCollection"}, {"features", features}};
    out << doc.dump() << '\n';
  }
  if (!out) throw Error("failed writing '" + f.out + "'");
  std::cout << "wrote " << rows.size() << " predictions to " << f.out << '\n';
  return 0;
}

int run_gradcheck(const GradCheckFlags& f) {
  if (f.samples < 1 || f.instances < 1) throw ConfigError("--samples and --instances must be >= 1");
  const std::uint64_t seed = f.seed.value_or(TrainConfig{}.seed);
  std::cout << "# resolved config\n#   seed = " << seed << "\n#   samples = " << f.samples
            << "\n#   instances = " << f.instances << "\n#   max_nodes = " << f.max_nodes << '\n';
  Rng rng(seed);
  nn::GradCheckOptions options;
  options.samples = f.samples;
  bool ok = true;
  for (const auto arch : {nn::Architecture::MLP, nn::Architecture::GCN}) {
    for (const auto loss : {nn::LossKind::MSE, nn::LossKind::Fuzzy}) {
      double worst = 0.0;
      std::size_t checked = 0;
      for (std::size_t i = 0; i < f.instances; ++i) {
        auto problem = nn::random_gradcheck_problem(arch, loss, rng, f.max_nodes);
        const auto r = nn::grad_check(problem.closure, problem.params, rng, options);
        worst = std::max(worst, r.max_relative_error);
        checked += r.checked;
      }
      const bool pass = worst <= options.tolerance;
      ok = ok && pass;
      std::cout << nn::to_string(arch) << ' ' << nn::to_string(loss)
                << " max_rel_error=" << csv::format_double(worst) << " checked=" << checked
                << (pass ? " ok" : " FAIL") << '\n';
    }
  }
  return ok ? 0 : 1;
}

}  // namespace geowealth::cli

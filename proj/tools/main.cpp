#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "geowealth/error.hpp"

namespace {

using namespace geowealth::cli;

void add_data_flags(CLI::App* cmd, DataFlags& d) {
  cmd->add_option("--clusters", d.clusters, "Survey clusters CSV")->required();
  cmd->add_option("--settlements", d.settlements, "Settlements CSV");
  cmd->add_option("--embeddings", d.embeddings, "Embedding table (binary or CSV)")->required();
}

void add_train_flags(CLI::App* cmd, TrainFlags& t) {
  add_data_flags(cmd, t.data);
  cmd->add_option("--folds", t.folds, "Survey fold groups CSV (group,survey_id)");
  cmd->add_option("--groups", t.groups, "Random survey groups when --folds is absent")
      ->default_val(5)
      ->check(CLI::Range(3, 26));
  cmd->add_option("--seed", t.seed, "Random seed");
  cmd->add_option("--lr-grid", t.lr_grid, "Comma-separated learning rates");
  cmd->add_option("--epochs", t.epochs, "Epochs per learning rate");
  cmd->add_option("--config", t.config, "key = value config file");
  cmd->add_option("--out", t.out, "Output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wealth prediction from survey clusters, settlements and embeddings", "geowealth"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "geowealth 0.1.0");

  SynthFlags synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic world");
  c_synth->add_option("--config", synth.config, "key = value config file");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--seed", synth.seed, "Random seed (overrides config)");

  BuildGraphFlags graph;
  auto* c_graph = app.add_subcommand("build-graph", "Build and dump the graph of a method");
  c_graph->add_option("--method", graph.method, "One of B, C, D, E, F")->required();
  add_data_flags(c_graph, graph.data);
  c_graph->add_option("--config", graph.config, "key = value config file");
  c_graph->add_option("--out", graph.out, "Output directory")->required();

  TrainFlags train;
  auto* c_train = app.add_subcommand("train", "Train one method on one fold");
  c_train->add_option("--method", train.method, "One of A-F")->required();
  c_train->add_option("--fold", train.fold, "Fold number, 1-based")->default_val(1);
  add_train_flags(c_train, train);

  TrainFlags cv;
  auto* c_cv = app.add_subcommand("cross-validate", "Survey-level cross-validation");
  c_cv->add_option("--method", cv.method, "Comma-separated methods from A-F, or 'all'")
      ->required();
  c_cv->add_option("--jobs", cv.jobs, "Parallel (method, fold) runs")->default_val(1);
  add_train_flags(c_cv, cv);

  PredictFlags predict;
  auto* c_pred = app.add_subcommand("predict", "Predict wealth at every settlement");
  c_pred->add_option("--method", predict.method, "One of A-F")->required();
  c_pred->add_option("--checkpoint", predict.checkpoint, "Trained parameter file")->required();
  add_data_flags(c_pred, predict.data);
  c_pred->get_option("--settlements")->required();
  c_pred->add_option("--config", predict.config, "key = value config file");
  c_pred->add_option("--format", predict.format, "Output format")
      ->default_val("csv")
      ->check(CLI::IsMember({"csv", "geojson"}));
  c_pred->add_flag("--clip", predict.clip, "Clip predictions to [0, 100]");
  c_pred->add_option("--out", predict.out, "Output file")->required();

  GradCheckFlags gc;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference check of every model/loss pair");
  c_gc->add_option("--seed", gc.seed, "Random seed");
  c_gc->add_option("--samples", gc.samples, "Parameters checked per instance")->default_val(200);
  c_gc->add_option("--instances", gc.instances, "Random instances per pair")->default_val(1);
  c_gc->add_option("--max-nodes", gc.max_nodes, "Largest instance")
      ->default_val(50)
      ->check(CLI::Range(2, 100000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (c_synth->parsed()) return run_synth(synth);
    if (c_graph->parsed()) return run_build_graph(graph);
    if (c_train->parsed()) return run_train(train);
    if (c_cv->parsed()) return run_cross_validate(cv);
    if (c_pred->parsed()) return run_predict(predict);
    if (c_gc->parsed()) return run_gradcheck(gc);
  } catch (const geowealth::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const geowealth::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const geowealth::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const geowealth::MissingEmbeddingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

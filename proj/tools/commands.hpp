#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

namespace geowealth::cli {

struct DataFlags {
  std::string clusters;
  std::string settlements;
  std::string embeddings;
};

struct SynthFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

struct BuildGraphFlags {
  std::string method;
  DataFlags data;
  std::string config;
  std::string out;
};

struct TrainFlags {
  std::string method;
  DataFlags data;
  std::string folds;
  std::size_t groups = 5;
  std::size_t fold = 1;
  std::optional<std::uint64_t> seed;
  std::string lr_grid;
  std::optional<std::size_t> epochs;
  std::string config;
  std::string out;
  std::size_t jobs = 1;
};

struct PredictFlags {
  std::string method;
  DataFlags data;
  std::string checkpoint;
  std::string config;
  std::string format = "csv";
  bool clip = false;
  std::string out;
};

struct GradCheckFlags {
  std::optional<std::uint64_t> seed;
  std::size_t samples = 200;
  std::size_t instances = 1;
  std::size_t max_nodes = 50;
};

int run_synth(const SynthFlags& f);
int run_build_graph(const BuildGraphFlags& f);
int run_train(const TrainFlags& f);
int run_cross_validate(const TrainFlags& f);
int run_predict(const PredictFlags& f);
int run_gradcheck(const GradCheckFlags& f);

}  // namespace geowealth::cli

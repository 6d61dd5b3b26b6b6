#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geowealth/dataset.hpp"
#include "geowealth/displacement.hpp"
#include "geowealth/kvconfig.hpp"

namespace geowealth {

/// Parameters of a synthetic world: a smooth wealth surface made of Gaussian
/// bumps, settlements scattered around the bumps, clusters placed on
/// settlements and then displaced, and embeddings that encode wealth
/// linearly along one fixed direction.
struct SyntheticWorldConfig {
  std::size_t n_centers = 20;
  std::size_t n_settlements = 5000;
  std::size_t n_clusters = 1500;
  std::size_t n_surveys = 10;
  double lat_min = -5.0;
  double lat_max = 5.0;
  double lon_min = 30.0;
  double lon_max = 40.0;
  double center_sigma_km = 40.0;
  double embed_noise_sigma = 0.05;
  double label_noise_sigma = 2.0;
  double urban_fraction = 0.3;
  /// Fraction of settlements removed after clusters are placed, emulating
  /// gaps in the settlement gazetteer.
  double settlement_dropout = 0.0;
  std::size_t embedding_dim = kEmbeddingDim;
  std::uint64_t seed = 42;
  DisplacementModel displacement;

  void validate() const;

  /// Reads every field from `cfg`, keeping defaults for absent keys.
  static SyntheticWorldConfig from_config(const KeyValueConfig& cfg);
  std::string to_config_text() const;
};

struct TruthRow {
  std::string key;
  GeoPoint location;
  double wealth = 0.0;
};

struct SyntheticWorld {
  SyntheticWorldConfig config;
  std::vector<GeoPoint> centers;
  /// Unit direction along which embeddings encode wealth.
  std::vector<double> wealth_direction;
  std::vector<Settlement> settlements;
  /// Same clusters with the true and the displaced coordinate.
  std::vector<SurveyCluster> clusters_true;
  std::vector<SurveyCluster> clusters_reported;
  /// Index into `settlements` of each cluster's true location, or nullopt if
  /// dropout removed it.
  std::vector<std::optional<std::size_t>> true_settlement;
  EmbeddingTable embeddings;
  std::vector<TruthRow> truth;

  Dataset dataset() const { return Dataset{clusters_reported, settlements, embeddings}; }
};

/// Latent wealth clip(20 + 70 * sum_k exp(-d_k^2 / (2 sigma^2)), 0, 100).
double latent_wealth(const GeoPoint& p, const std::vector<GeoPoint>& centers, double sigma_km);

/// Pure function of `config`.
SyntheticWorld generate_synthetic(const SyntheticWorldConfig& config);

/// Writes settlements.csv, clusters.csv (reported coordinates),
/// embeddings.bin and truth.csv into `dir`.
void write_synthetic(const SyntheticWorld& world, const std::string& dir);

}  // namespace geowealth

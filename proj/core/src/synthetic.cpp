#include "geowealth/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "geowealth/csv.hpp"
#include "geowealth/error.hpp"

namespace geowealth {
namespace {

enum Stream : std::uint64_t {
  kCenters = 1,
  kSettlements,
  kClusters,
  kDisplacement,
  kLabels,
  kEmbeddings,
  kDirection,
  kDropout,
};

std::string padded(const char* prefix, std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, value);
  return buf;
}

bool inside(const SyntheticWorldConfig& c, const GeoPoint& p) {
  return p.lat >= c.lat_min && p.lat <= c.lat_max && p.lon >= c.lon_min && p.lon <= c.lon_max;
}

GeoPoint uniform_point(const SyntheticWorldConfig& c, Rng& rng) {
  return GeoPoint{rng.uniform(c.lat_min, c.lat_max), rng.uniform(c.lon_min, c.lon_max)};
}

GeoPoint gaussian_around(const SyntheticWorldConfig& c, const GeoPoint& center, Rng& rng) {
  // Isotropic planar Gaussian in km, mapped onto the sphere. Points that land
  // outside the box are redrawn so that surveys keep a fixed footprint.
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double east = rng.normal(0.0, c.center_sigma_km);
    const double north = rng.normal(0.0, c.center_sigma_km);
    const GeoPoint p = destination(center, std::atan2(east, north), std::hypot(east, north));
    if (inside(c, p)) return p;
  }
  return center;
}

}  // namespace

void SyntheticWorldConfig::validate() const {
  if (n_centers < 1 || n_settlements < 1 || n_clusters < 1 || n_surveys < 1) {
    throw ConfigError("synthetic config: counts must be at least 1");
  }
  if (n_clusters > n_settlements) {
    throw ConfigError("synthetic config: n_clusters (" + std::to_string(n_clusters) +
                      ") exceeds n_settlements (" + std::to_string(n_settlements) + ")");
  }
  if (!(lat_min < lat_max) || !(lon_min < lon_max) || lat_min < -90.0 || lat_max > 90.0 ||
      lon_min < -180.0 || lon_max >= 180.0) {
    throw ConfigError("synthetic config: bounding box is degenerate or out of range");
  }
  if (!(center_sigma_km > 0.0)) throw ConfigError("synthetic config: center_sigma_km must be > 0");
  if (!(embed_noise_sigma >= 0.0) || !(label_noise_sigma >= 0.0)) {
    throw ConfigError("synthetic config: noise sigmas must be >= 0");
  }
  if (!(urban_fraction >= 0.0 && urban_fraction <= 1.0)) {
    throw ConfigError("synthetic config: urban_fraction must lie in [0, 1]");
  }
  if (!(settlement_dropout >= 0.0 && settlement_dropout < 1.0)) {
    throw ConfigError("synthetic config: settlement_dropout must lie in [0, 1)");
  }
  if (embedding_dim < 1) throw ConfigError("synthetic config: embedding_dim must be >= 1");
  displacement.validate();
}

SyntheticWorldConfig SyntheticWorldConfig::from_config(const KeyValueConfig& cfg) {
  SyntheticWorldConfig c;
  c.n_centers = cfg.get_uint("n_centers", c.n_centers);
  c.n_settlements = cfg.get_uint("n_settlements", c.n_settlements);
  c.n_clusters = cfg.get_uint("n_clusters", c.n_clusters);
  c.n_surveys = cfg.get_uint("n_surveys", c.n_surveys);
  c.lat_min = cfg.get_double("lat_min", c.lat_min);
  c.lat_max = cfg.get_double("lat_max", c.lat_max);
  c.lon_min = cfg.get_double("lon_min", c.lon_min);
  c.lon_max = cfg.get_double("lon_max", c.lon_max);
  c.center_sigma_km = cfg.get_double("center_sigma_km", c.center_sigma_km);
  c.embed_noise_sigma = cfg.get_double("embed_noise_sigma", c.embed_noise_sigma);
  c.label_noise_sigma = cfg.get_double("label_noise_sigma", c.label_noise_sigma);
  c.urban_fraction = cfg.get_double("urban_fraction", c.urban_fraction);
  c.settlement_dropout = cfg.get_double("settlement_dropout", c.settlement_dropout);
  c.embedding_dim = cfg.get_uint("embedding_dim", c.embedding_dim);
  c.seed = cfg.get_uint("seed", c.seed);
  c.displacement.urban_max = cfg.get_double("urban_max_km", c.displacement.urban_max);
  c.displacement.rural_common_max =
      cfg.get_double("rural_common_max_km", c.displacement.rural_common_max);
  c.displacement.rural_rare_max = cfg.get_double("rural_rare_max_km", c.displacement.rural_rare_max);
  c.displacement.rural_rare_prob = cfg.get_double("rural_rare_prob", c.displacement.rural_rare_prob);
  return c;
}

std::string SyntheticWorldConfig::to_config_text() const {
  std::ostringstream out;
  out << "n_centers = " << n_centers << '\n'
      << "n_settlements = " << n_settlements << '\n'
      << "n_clusters = " << n_clusters << '\n'
      << "n_surveys = " << n_surveys << '\n'
      << "lat_min = " << csv::format_double(lat_min) << '\n'
      << "lat_max = " << csv::format_double(lat_max) << '\n'
      << "lon_min = " << csv::format_double(lon_min) << '\n'
      << "lon_max = " << csv::format_double(lon_max) << '\n'
      << "center_sigma_km = " << csv::format_double(center_sigma_km) << '\n'
      << "embed_noise_sigma = " << csv::format_double(embed_noise_sigma) << '\n'
      << "label_noise_sigma = " << csv::format_double(label_noise_sigma) << '\n'
      << "urban_fraction = " << csv::format_double(urban_fraction) << '\n'
      << "settlement_dropout = " << csv::format_double(settlement_dropout) << '\n'
      << "embedding_dim = " << embedding_dim << '\n'
      << "seed = " << seed << '\n'
      << "urban_max_km = " << csv::format_double(displacement.urban_max) << '\n'
      << "rural_common_max_km = " << csv::format_double(displacement.rural_common_max) << '\n'
      << "rural_rare_max_km = " << csv::format_double(displacement.rural_rare_max) << '\n'
      << "rural_rare_prob = " << csv::format_double(displacement.rural_rare_prob) << '\n';
  return out.str();
}

double latent_wealth(const GeoPoint& p, const std::vector<GeoPoint>& centers, double sigma_km) {
  double bumps = 0.0;
  const double denom = 2.0 * sigma_km * sigma_km;
  for (const auto& c : centers) {
    const double d = haversine_km(p, c);
    bumps += std::exp(-(d * d) / denom);
  }
  return std::clamp(20.0 + 70.0 * bumps, 0.0, 100.0);
}

SyntheticWorld generate_synthetic(const SyntheticWorldConfig& config) {
  config.validate();
  const Rng root(config.seed);
  SyntheticWorld world;
  world.config = config;
  world.embeddings = EmbeddingTable(config.embedding_dim);

  Rng center_rng = root.split(kCenters);
  world.centers.reserve(config.n_centers);
  for (std::size_t k = 0; k < config.n_centers; ++k) {
    world.centers.push_back(uniform_point(config, center_rng));
  }
  auto wealth = [&](const GeoPoint& p) {
    return latent_wealth(p, world.centers, config.center_sigma_km);
  };

  // 70% of settlements cluster around wealth centers, the rest are uniform.
  Rng settle_rng = root.split(kSettlements);
  std::vector<Settlement> all_settlements;
  all_settlements.reserve(config.n_settlements);
  for (std::size_t i = 0; i < config.n_settlements; ++i) {
    GeoPoint p;
    if (settle_rng.bernoulli(0.7)) {
      const auto& c = world.centers[settle_rng.below(config.n_centers)];
      p = gaussian_around(config, c, settle_rng);
    } else {
      p = uniform_point(config, settle_rng);
    }
    all_settlements.push_back(Settlement{padded("s", i, 6), p});
  }

  // True cluster locations: settlements drawn without replacement.
  Rng cluster_rng = root.split(kClusters);
  std::vector<std::size_t> order(config.n_settlements);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < config.n_clusters; ++i) {
    const std::size_t j = i + cluster_rng.below(config.n_settlements - i);
    std::swap(order[i], order[j]);
  }
  std::vector<std::size_t> chosen(order.begin(), order.begin() + config.n_clusters);
  std::sort(chosen.begin(), chosen.end());

  Rng displace_rng = root.split(kDisplacement);
  Rng label_rng = root.split(kLabels);
  std::vector<std::size_t> per_survey_count(config.n_surveys, 0);
  const double lon_span = config.lon_max - config.lon_min;
  std::vector<std::size_t> chosen_settlement;
  for (std::size_t s_idx : chosen) {
    const GeoPoint truth = all_settlements[s_idx].location;
    // Surveys are longitude bands, so a held-out survey is a held-out region.
    auto band = static_cast<std::size_t>(
        std::floor(static_cast<double>(config.n_surveys) * (truth.lon - config.lon_min) / lon_span));
    band = std::min(band, config.n_surveys - 1);

    SurveyCluster c;
    c.survey_id = padded("S", band, 2);
    c.cluster_id = padded("c", per_survey_count[band]++, 5);
    c.kind = cluster_rng.bernoulli(config.urban_fraction) ? ClusterType::Urban : ClusterType::Rural;
    const double y = wealth(truth) + label_rng.normal(0.0, config.label_noise_sigma);
    c.iwi = std::clamp(y, 0.0, 100.0);
    c.reported = truth;
    world.clusters_true.push_back(c);
    c.reported = displace(truth, c.kind, config.displacement, displace_rng);
    world.clusters_reported.push_back(c);
    chosen_settlement.push_back(s_idx);
  }

  // Gazetteer gaps: drop a fixed number of settlements after placement.
  std::vector<bool> dropped(config.n_settlements, false);
  const auto n_drop = static_cast<std::size_t>(
      std::floor(config.settlement_dropout * static_cast<double>(config.n_settlements)));
  if (n_drop > 0) {
    Rng drop_rng = root.split(kDropout);
    std::vector<std::size_t> perm(config.n_settlements);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    drop_rng.shuffle(std::span<std::size_t>(perm));
    for (std::size_t i = 0; i < n_drop; ++i) dropped[perm[i]] = true;
  }
  std::vector<std::optional<std::size_t>> new_index(config.n_settlements);
  for (std::size_t i = 0; i < config.n_settlements; ++i) {
    if (dropped[i]) continue;
    new_index[i] = world.settlements.size();
    world.settlements.push_back(all_settlements[i]);
  }
  for (std::size_t s_idx : chosen_settlement) world.true_settlement.push_back(new_index[s_idx]);

  Rng dir_rng = root.split(kDirection);
  world.wealth_direction.resize(config.embedding_dim);
  double norm = 0.0;
  while (norm == 0.0) {
    norm = 0.0;
    for (auto& v : world.wealth_direction) {
      v = dir_rng.normal();
      norm += v * v;
    }
  }
  norm = std::sqrt(norm);
  for (auto& v : world.wealth_direction) v /= norm;

  Rng embed_rng = root.split(kEmbeddings);
  std::vector<double> row(config.embedding_dim);
  auto embed = [&](const std::string& key, const GeoPoint& p) {
    const double w = wealth(p) / 100.0;
    for (std::size_t d = 0; d < config.embedding_dim; ++d) {
      row[d] = world.wealth_direction[d] * w + embed_rng.normal(0.0, config.embed_noise_sigma);
    }
    world.embeddings.add(key, row);
  };
  for (const auto& s : world.settlements) {
    embed(s.settlement_id, s.location);
    world.truth.push_back(TruthRow{s.settlement_id, s.location, wealth(s.location)});
  }
  for (std::size_t j = 0; j < world.clusters_reported.size(); ++j) {
    const auto& c = world.clusters_reported[j];
    embed(c.key(), c.reported);
    const GeoPoint truth = world.clusters_true[j].reported;
    world.truth.push_back(TruthRow{c.key(), truth, wealth(truth)});
  }
  return world;
}

void write_synthetic(const SyntheticWorld& world, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  save_settlements((base / "settlements.csv").string(), world.settlements);
  save_clusters((base / "clusters.csv").string(), world.clusters_reported);
  save_embeddings_binary((base / "embeddings.bin").string(), world.embeddings);
  auto out = csv::open_output((base / "truth.csv").string());
  out << "key,lat,lon,true_wealth\n";
  for (const auto& t : world.truth) {
    out << t.key << ',' << csv::format_double(t.location.lat) << ','
        << csv::format_double(t.location.lon) << ',' << csv::format_double(t.wealth) << '\n';
  }
  if (!out) throw Error("failed writing truth.csv");
}

}  // namespace geowealth

#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "fixtures.hpp"
#include "geowealth/error.hpp"
#include "geowealth/geo.hpp"
#include "geowealth/kvconfig.hpp"
#include "geowealth/synthetic.hpp"
#include "oracles.hpp"

using namespace geowealth;

namespace {

SyntheticWorldConfig small(std::uint64_t seed = 1) {
  SyntheticWorldConfig c;
  c.n_settlements = 800;
  c.n_clusters = 300;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("latent wealth") {
  const std::vector<GeoPoint> one{GeoPoint::make(0, 35)};
  CHECK(latent_wealth(GeoPoint::make(0, 35), one, 40) == doctest::Approx(90.0));
  CHECK(latent_wealth(GeoPoint::make(20, 35), one, 40) == doctest::Approx(20.0));
  const std::vector<GeoPoint> two{GeoPoint::make(0, 35), GeoPoint::make(0, 35)};
  CHECK(latent_wealth(GeoPoint::make(0, 35), two, 40) == 100.0);
}

TEST_CASE("config checks") {
  auto c = small();
  c.n_clusters = c.n_settlements + 1;
  CHECK_THROWS_AS(generate_synthetic(c), ConfigError);
  c = small();
  c.settlement_dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small();
  c.lat_min = c.lat_max;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  c = small(99);
  c.settlement_dropout = 0.1;
  c.displacement.urban_max = 3;
  const auto again = SyntheticWorldConfig::from_config(KeyValueConfig::parse_string(c.to_config_text()));
  CHECK(again.to_config_text() == c.to_config_text());
}

TEST_CASE("same seed gives identical files, another seed does not") {
  fixture::TempDir dir("synth");
  write_synthetic(generate_synthetic(small()), dir.file("a"));
  write_synthetic(generate_synthetic(small()), dir.file("b"));
  write_synthetic(generate_synthetic(small(2)), dir.file("c"));
  for (const char* name : {"settlements.csv", "clusters.csv", "embeddings.bin", "truth.csv"}) {
    CAPTURE(name);
    const auto a = fixture::read_file(dir.file(std::string("a/") + name));
    CHECK(!a.empty());
    CHECK(a == fixture::read_file(dir.file(std::string("b/") + name)));
    CHECK(a != fixture::read_file(dir.file(std::string("c/") + name)));
  }
  // The written files load back.
  const auto clusters = load_clusters(dir.file("a/clusters.csv"));
  CHECK(clusters.size() == 300);
  CHECK(load_embeddings(dir.file("a/embeddings.bin")).size() == 800 + 300);
}

TEST_CASE("clusters sit on settlements and are displaced within range") {
  const auto w = generate_synthetic(small(3));
  REQUIRE(w.clusters_true.size() == 300);
  REQUIRE(w.settlements.size() == 800);
  std::size_t urban = 0;
  std::vector<bool> used(w.settlements.size(), false);
  for (std::size_t j = 0; j < w.clusters_true.size(); ++j) {
    const auto& t = w.clusters_true[j];
    const auto& r = w.clusters_reported[j];
    REQUIRE(w.true_settlement[j].has_value());
    const std::size_t s = *w.true_settlement[j];
    CHECK(w.settlements[s].location == t.reported);
    CHECK_FALSE(used[s]);
    used[s] = true;
    CHECK(t.key() == r.key());
    CHECK(t.iwi == r.iwi);
    CHECK(r.iwi >= 0);
    CHECK(r.iwi <= 100);
    const double limit = r.kind == ClusterType::Urban ? 2.0 : 10.0;
    CHECK(haversine_km(t.reported, r.reported) <= limit + 1e-9);
    urban += r.kind == ClusterType::Urban;
    CHECK(w.embeddings.contains(r.key()));
  }
  CHECK(urban > 50);
  CHECK(urban < 130);
  CHECK(w.truth.size() == w.settlements.size() + w.clusters_true.size());
}

TEST_CASE("noise-free embeddings encode wealth linearly") {
  auto c = small(4);
  c.embed_noise_sigma = 0;
  c.label_noise_sigma = 0;
  const auto w = generate_synthetic(c);
  double norm = 0;
  for (double v : w.wealth_direction) norm += v * v;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));

  const std::size_t n = w.clusters_true.size();
  Eigen::MatrixXd x(n, c.embedding_dim);
  Eigen::VectorXd y(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto row = w.embeddings.at(w.settlements[*w.true_settlement[j]].settlement_id);
    for (std::size_t k = 0; k < row.size(); ++k) x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = row[k];
    y(static_cast<Eigen::Index>(j)) = w.clusters_true[j].iwi;
  }
  CHECK(oracle::linear_probe_r2(x, y, x, y) >= 0.999);
}

TEST_CASE("dropout removes settlements after placement") {
  auto c = small(5);
  c.settlement_dropout = 0.2;
  const auto w = generate_synthetic(c);
  CHECK(w.settlements.size() < 800);
  CHECK(w.settlements.size() > 560);
  std::size_t lost = 0;
  for (std::size_t j = 0; j < w.clusters_true.size(); ++j) {
    if (!w.true_settlement[j]) {
      ++lost;
    } else {
      CHECK(w.settlements[*w.true_settlement[j]].location == w.clusters_true[j].reported);
    }
  }
  CHECK(lost > 20);
  CHECK(lost < 100);
}

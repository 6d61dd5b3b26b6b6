#include "fixtures.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fixture {

using namespace geowealth;

Dataset random_dataset(const WorldSpec& spec, Rng& rng) {
  Dataset data{{}, {}, EmbeddingTable(spec.dim)};
  std::vector<GeoPoint> seen;
  auto point = [&] {
    if (!seen.empty() && rng.bernoulli(spec.duplicate_prob)) {
      return seen[rng.below(seen.size())];
    }
    const GeoPoint p = GeoPoint::make(spec.lat0 + rng.uniform(0.0, spec.span_deg),
                                      spec.lon0 + rng.uniform(0.0, spec.span_deg));
    seen.push_back(p);
    return p;
  };
  auto embedding = [&] {
    std::vector<double> v(spec.dim);
    for (auto& x : v) x = rng.normal();
    return v;
  };
  for (std::size_t i = 0; i < spec.settlements; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "s%05zu", i);
    data.settlements.push_back({id, point()});
    data.embeddings.add(id, embedding());
  }
  for (std::size_t j = 0; j < spec.clusters; ++j) {
    SurveyCluster c;
    c.survey_id = "S" + std::to_string(rng.below(spec.surveys));
    c.cluster_id = std::to_string(j);
    c.reported = point();
    c.kind = rng.bernoulli(0.3) ? ClusterType::Urban : ClusterType::Rural;
    c.iwi = rng.uniform(0.0, 100.0);
    data.embeddings.add(c.key(), embedding());
    data.clusters.push_back(c);
  }
  return data;
}

TempDir::TempDir(const std::string& tag) {
  static unsigned counter = 0;
  const auto base = std::filesystem::temp_directory_path();
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = base / ("gw_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(++counter));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace fixture

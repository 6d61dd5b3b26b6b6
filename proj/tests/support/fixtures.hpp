#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "geowealth/dataset.hpp"
#include "geowealth/rng.hpp"

namespace fixture {

struct WorldSpec {
  std::size_t clusters = 100;
  std::size_t settlements = 300;
  std::size_t surveys = 3;
  std::size_t dim = 4;
  double lat0 = 0.0;
  double lon0 = 30.0;
  double span_deg = 2.0;
  // Probability that a point copies an earlier location exactly.
  double duplicate_prob = 0.05;
};

// Random clusters and settlements in a small box with random embeddings.
geowealth::Dataset random_dataset(const WorldSpec& spec, geowealth::Rng& rng);

// Self-deleting scratch directory.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace fixture

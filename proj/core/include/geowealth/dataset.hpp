#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geowealth/displacement.hpp"
#include "geowealth/geo.hpp"

namespace geowealth {

inline constexpr std::size_t kEmbeddingDim = 64;

/// One DHS-style survey cluster: a displaced (reported) coordinate and the
/// cluster-mean wealth index.
struct SurveyCluster {
  std::string survey_id;
  std::string cluster_id;
  GeoPoint reported;
  ClusterType kind = ClusterType::Rural;
  double iwi = 0.0;

  /// Node/embedding key: "<survey_id>/<cluster_id>".
  std::string key() const { return survey_id + "/" + cluster_id; }
};

struct Settlement {
  std::string settlement_id;
  GeoPoint location;
};

/// Row-per-key table of fixed-width embedding vectors.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = kEmbeddingDim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return keys_.size(); }
  const std::vector<std::string>& keys() const noexcept { return keys_; }

  /// Adds a row; throws ValidationError on duplicate key, wrong width or
  /// non-finite values.
  void add(std::string key, std::span<const double> values);

  bool contains(std::string_view key) const;
  std::optional<std::size_t> find(std::string_view key) const;
  std::span<const double> row(std::size_t index) const;
  /// Throws MissingEmbeddingError naming the key.
  std::span<const double> at(std::string_view key) const;

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.dim_ == b.dim_ && a.keys_ == b.keys_ && a.values_ == b.values_;
  }

 private:
  std::size_t dim_;
  std::vector<std::string> keys_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Clusters, settlements and embeddings for one run.
struct Dataset {
  std::vector<SurveyCluster> clusters;
  std::vector<Settlement> settlements;
  EmbeddingTable embeddings;
};

// File I/O. Every loader preserves row order and reports the offending line.
std::vector<SurveyCluster> load_clusters(const std::string& path);
void save_clusters(const std::string& path, std::span<const SurveyCluster> clusters);

std::vector<Settlement> load_settlements(const std::string& path);
void save_settlements(const std::string& path, std::span<const Settlement> settlements);

/// Reads either encoding; binary files are recognised by their magic bytes.
EmbeddingTable load_embeddings(const std::string& path, std::size_t expected_dim = kEmbeddingDim);
void save_embeddings_csv(const std::string& path, const EmbeddingTable& table);
/// Binary encoding stores f32 values; doubles are narrowed on write.
void save_embeddings_binary(const std::string& path, const EmbeddingTable& table);

inline constexpr std::string_view kEmbeddingMagic = "AEEMB001";

}  // namespace geowealth

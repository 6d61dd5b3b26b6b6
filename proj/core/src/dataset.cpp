#include "geowealth/dataset.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <utility>

#include "geowealth/csv.hpp"
#include "geowealth/error.hpp"

namespace geowealth {
namespace {

constexpr std::string_view kClusterHeader = "survey_id,cluster_id,lat,lon,urban,iwi";
constexpr std::string_view kSettlementHeader = "settlement_id,lat,lon";

GeoPoint parse_point(const csv::Reader& reader, std::string_view lat, std::string_view lon) {
  const double la = csv::parse_double(lat, reader.path(), reader.line());
  const double lo = csv::parse_double(lon, reader.path(), reader.line());
  try {
    return GeoPoint::make(la, lo);
  } catch (const DomainError& e) {
    reader.fail(e.what());
  }
}

std::string embedding_header(std::size_t dim) {
  std::string header = "key";
  for (std::size_t i = 0; i < dim; ++i) header += ",e" + std::to_string(i);
  return header;
}

void put_u16(std::ostream& out, std::uint16_t v) {
  const std::array<char, 2> b{static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  out.write(b.data(), b.size());
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), b.size());
}

class ByteReader {
 public:
  explicit ByteReader(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw Error("cannot open '" + path_ + "'");
    bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw ValidationError(path_ + ": truncated binary embedding file at byte " +
                            std::to_string(pos_));
    }
    std::string_view out(bytes_.data() + pos_, n);
    pos_ += n;
    return out;
  }

  std::uint32_t u32() {
    const auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }

  std::uint16_t u16() {
    const auto b = take(2);
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[0]) |
                                      (static_cast<unsigned char>(b[1]) << 8));
  }

  float f32() { return std::bit_cast<float>(u32()); }

  bool at_end() const { return pos_ == bytes_.size(); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::string bytes_;
  std::size_t pos_ = 0;
};

EmbeddingTable load_embeddings_binary(const std::string& path, std::size_t expected_dim) {
  ByteReader in(path);
  if (in.take(kEmbeddingMagic.size()) != kEmbeddingMagic) {
    throw ValidationError(path + ": bad magic bytes");
  }
  const std::uint32_t count = in.u32();
  const std::uint32_t dim = in.u32();
  if (dim != expected_dim) {
    throw ValidationError(path + ": embedding dimension " + std::to_string(dim) +
                          ", expected " + std::to_string(expected_dim));
  }
  std::vector<std::string> keys;
  keys.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = in.u16();
    keys.emplace_back(in.take(len));
  }
  EmbeddingTable table(dim);
  std::vector<double> row(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    for (std::uint32_t d = 0; d < dim; ++d) row[d] = static_cast<double>(in.f32());
    table.add(std::move(keys[i]), row);
  }
  if (!in.at_end()) throw ValidationError(path + ": trailing bytes after embedding values");
  return table;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw ValidationError("embedding dimension must be positive");
}

void EmbeddingTable::add(std::string key, std::span<const double> values) {
  if (values.size() != dim_) {
    throw ValidationError("embedding '" + key + "' has " + std::to_string(values.size()) +
                          " values, expected dimension " + std::to_string(dim_));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("embedding '" + key + "' has a non-finite value");
  }
  if (index_.contains(key)) throw ValidationError("duplicate embedding key '" + key + "'");
  index_.emplace(key, keys_.size());
  keys_.push_back(std::move(key));
  values_.insert(values_.end(), values.begin(), values.end());
}

bool EmbeddingTable::contains(std::string_view key) const {
  return index_.find(std::string(key)) != index_.end();
}

std::optional<std::size_t> EmbeddingTable::find(std::string_view key) const {
  const auto it = index_.find(std::string(key));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> EmbeddingTable::row(std::size_t index) const {
  return std::span<const double>(values_).subspan(index * dim_, dim_);
}

std::span<const double> EmbeddingTable::at(std::string_view key) const {
  const auto idx = find(key);
  if (!idx) throw MissingEmbeddingError(std::string(key));
  return row(*idx);
}

std::vector<SurveyCluster> load_clusters(const std::string& path) {
  csv::Reader reader(path, kClusterHeader);
  std::vector<SurveyCluster> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    SurveyCluster c;
    c.survey_id = std::string(f[0]);
    c.cluster_id = std::string(f[1]);
    if (c.survey_id.empty() || c.cluster_id.empty()) reader.fail("empty survey_id or cluster_id");
    c.reported = parse_point(reader, f[2], f[3]);
    if (f[4] == "1") {
      c.kind = ClusterType::Urban;
    } else if (f[4] == "0") {
      c.kind = ClusterType::Rural;
    } else {
      reader.fail("urban must be 0 or 1, got '" + std::string(f[4]) + "'");
    }
    c.iwi = csv::parse_double(f[5], path, reader.line());
    if (c.iwi < 0.0 || c.iwi > 100.0) {
      throw ValidationError(path + ":" + std::to_string(reader.line()) + ": iwi " +
                            std::string(f[5]) + " outside [0, 100]");
    }
    if (!seen.emplace(c.survey_id, c.cluster_id).second) {
      throw ValidationError(path + ":" + std::to_string(reader.line()) + ": duplicate cluster " +
                            c.key());
    }
    out.push_back(std::move(c));
  }
  return out;
}

void save_clusters(const std::string& path, std::span<const SurveyCluster> clusters) {
  auto out = csv::open_output(path);
  out << kClusterHeader << '\n';
  for (const auto& c : clusters) {
    out << c.survey_id << ',' << c.cluster_id << ',' << csv::format_double(c.reported.lat) << ','
        << csv::format_double(c.reported.lon) << ',' << (c.kind == ClusterType::Urban ? 1 : 0)
        << ',' << csv::format_double(c.iwi) << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

std::vector<Settlement> load_settlements(const std::string& path) {
  csv::Reader reader(path, kSettlementHeader);
  std::vector<Settlement> out;
  std::set<std::string> seen;
  std::vector<std::string_view> f;
  while (reader.next(f)) {
    Settlement s;
    s.settlement_id = std::string(f[0]);
    if (s.settlement_id.empty()) reader.fail("empty settlement_id");
    s.location = parse_point(reader, f[1], f[2]);
    if (!seen.insert(s.settlement_id).second) {
      throw ValidationError(path + ":" + std::to_string(reader.line()) +
                            ": duplicate settlement " + s.settlement_id);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void save_settlements(const std::string& path, std::span<const Settlement> settlements) {
  auto out = csv::open_output(path);
  out << kSettlementHeader << '\n';
  for (const auto& s : settlements) {
    out << s.settlement_id << ',' << csv::format_double(s.location.lat) << ','
        << csv::format_double(s.location.lon) << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

EmbeddingTable load_embeddings(const std::string& path, std::size_t expected_dim) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw Error("cannot open '" + path + "'");
    std::array<char, 8> magic{};
    probe.read(magic.data(), magic.size());
    if (probe.gcount() == 8 && std::string_view(magic.data(), 8) == kEmbeddingMagic) {
      return load_embeddings_binary(path, expected_dim);
    }
  }
  csv::Reader reader(path, embedding_header(expected_dim), /*strict_width=*/false);
  EmbeddingTable table(expected_dim);
  std::vector<std::string_view> f;
  std::vector<double> row(expected_dim);
  while (reader.next(f)) {
    if (f.size() != expected_dim + 1) {
      throw ValidationError(path + ":" + std::to_string(reader.line()) + ": embedding has " +
                            std::to_string(f.size() - 1) + " values, dimension must be " +
                            std::to_string(expected_dim));
    }
    for (std::size_t d = 0; d < expected_dim; ++d) {
      row[d] = csv::parse_double(f[d + 1], path, reader.line());
    }
    try {
      table.add(std::string(f[0]), row);
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(reader.line()) + ": " + e.what());
    }
  }
  return table;
}

void save_embeddings_csv(const std::string& path, const EmbeddingTable& table) {
  auto out = csv::open_output(path);
  out << embedding_header(table.dim()) << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.keys()[i];
    for (double v : table.row(i)) out << ',' << csv::format_double(v);
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

void save_embeddings_binary(const std::string& path, const EmbeddingTable& table) {
  auto out = csv::open_output(path);
  out.write(kEmbeddingMagic.data(), static_cast<std::streamsize>(kEmbeddingMagic.size()));
  put_u32(out, static_cast<std::uint32_t>(table.size()));
  put_u32(out, static_cast<std::uint32_t>(table.dim()));
  for (const auto& key : table.keys()) {
    if (key.size() > UINT16_MAX) throw ValidationError("embedding key too long: " + key);
    put_u16(out, static_cast<std::uint16_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (double v : table.row(i)) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace geowealth

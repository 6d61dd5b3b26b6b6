#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace geowealth {

/// Plain-text `key = value` configuration with `#` comments.
///
/// Getters remember which keys were read so that `reject_unknown()` can flag
/// misspelt keys after a consumer has pulled everything it understands.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text, const std::string& source = "<string>");

  bool has(const std::string& key) const { return values_.contains(key); }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) const;

  /// Throws ConfigError naming every key that no getter has asked for.
  void reject_unknown() const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::string source_ = "<string>";
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

/// Comma-separated list of reals, e.g. "1e-2,3e-3".
std::vector<double> parse_double_list(const std::string& text);

}  // namespace geowealth

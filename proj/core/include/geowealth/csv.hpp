#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace geowealth::csv {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

double parse_double(std::string_view text, const std::string& source, std::size_t line);
std::int64_t parse_int(std::string_view text, const std::string& source, std::size_t line);

/// Splits on commas. No quoting: ids in these files never contain commas.
std::vector<std::string_view> split(std::string_view line);

/// Line-oriented reader that checks the header and tracks line numbers.
class Reader {
 public:
  Reader(const std::string& path, std::string_view expected_header, bool strict_width = true);

  /// Next non-empty row; false at end of file.
  bool next(std::vector<std::string_view>& fields);
  std::size_t line() const noexcept { return line_; }
  const std::string& path() const noexcept { return path_; }
  const std::vector<std::string>& header() const noexcept { return header_; }

  [[noreturn]] void fail(const std::string& what) const;

 private:
  std::string path_;
  std::ifstream in_;
  std::string buffer_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
  bool strict_width_ = true;
};

/// Opens `path` for writing and throws on failure.
std::ofstream open_output(const std::string& path);

}  // namespace geowealth::csv

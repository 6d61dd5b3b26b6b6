#include "geowealth/csv.hpp"

#include <charconv>
#include <cmath>

#include "geowealth/error.hpp"

namespace geowealth::csv {

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

double parse_double(std::string_view text, const std::string& source, std::size_t line) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto result = std::from_chars(text.data(), end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    throw ParseError(source, line, "expected a number, got '" + std::string(text) + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError(source, line, "non-finite number '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view text, const std::string& source, std::size_t line) {
  std::int64_t value = 0;
  const char* end = text.data() + text.size();
  const auto result = std::from_chars(text.data(), end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    throw ParseError(source, line, "expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

Reader::Reader(const std::string& path, std::string_view expected_header, bool strict_width)
    : path_(path), in_(path), strict_width_(strict_width) {
  if (!in_) throw Error("cannot open '" + path + "'");
  if (!std::getline(in_, buffer_)) throw ParseError(path_, 1, "missing header");
  line_ = 1;
  if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
  if (buffer_ != expected_header) {
    throw ParseError(path_, 1,
                     "header mismatch: expected '" + std::string(expected_header) + "'");
  }
  for (auto field : split(buffer_)) header_.emplace_back(field);
}

bool Reader::next(std::vector<std::string_view>& fields) {
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
    if (buffer_.empty()) continue;
    fields = split(buffer_);
    if (strict_width_ && fields.size() != header_.size()) {
      fail("expected " + std::to_string(header_.size()) + " fields, got " +
           std::to_string(fields.size()));
    }
    return true;
  }
  return false;
}

void Reader::fail(const std::string& what) const { throw ParseError(path_, line_, what); }

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

}  // namespace geowealth::csv

#include "geowealth/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>

#include "geowealth/error.hpp"

namespace geowealth::nn {
namespace {

void put_u64(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Cursor {
 public:
  Cursor(std::string_view bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  std::uint64_t uint(int n) {
    if (bytes_.size() - pos_ < static_cast<std::size_t>(n)) {
      throw ValidationError(source_ + ": truncated checkpoint");
    }
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) {
      v = (v << 8) | static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw ValidationError(source_ + ": truncated checkpoint");
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_params(const ModelParams& params) {
  std::string out(kCheckpointMagic);
  out.push_back(static_cast<char>(params.arch));
  put_u64(out, params.layers.size(), 4);
  for (const auto& l : params.layers) {
    put_u64(out, static_cast<std::uint64_t>(l.weight.rows()), 4);
    put_u64(out, static_cast<std::uint64_t>(l.weight.cols()), 4);
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) {
      put_u64(out, std::bit_cast<std::uint64_t>(l.weight.data()[i]), 8);
    }
    put_u64(out, static_cast<std::uint64_t>(l.bias.size()), 4);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) {
      put_u64(out, std::bit_cast<std::uint64_t>(l.bias.data()[i]), 8);
    }
  }
  return out;
}

ModelParams decode_params(std::string_view bytes, const std::string& source) {
  Cursor in(bytes, source);
  if (in.take(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw ValidationError(source + ": not a parameter checkpoint");
  }
  ModelParams p;
  const auto tag = in.uint(1);
  if (tag != static_cast<std::uint8_t>(Architecture::MLP) &&
      tag != static_cast<std::uint8_t>(Architecture::GCN)) {
    throw ValidationError(source + ": unknown architecture tag " + std::to_string(tag));
  }
  p.arch = static_cast<Architecture>(tag);
  const auto layers = in.uint(4);
  for (std::uint64_t l = 0; l < layers; ++l) {
    const auto rows = static_cast<Eigen::Index>(in.uint(4));
    const auto cols = static_cast<Eigen::Index>(in.uint(4));
    Layer layer{Matrix(rows, cols), RowVector()};
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = in.f64();
    const auto blen = static_cast<Eigen::Index>(in.uint(4));
    layer.bias.resize(blen);
    for (Eigen::Index i = 0; i < blen; ++i) layer.bias.data()[i] = in.f64();
    p.layers.push_back(std::move(layer));
  }
  if (!in.at_end()) throw ValidationError(source + ": trailing bytes in checkpoint");
  p.check_shape(p.arch);
  return p;
}

void save_params(const std::string& path, const ModelParams& params) {
  const std::string bytes = encode_params(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_params(bytes, path);
}

}  // namespace geowealth::nn

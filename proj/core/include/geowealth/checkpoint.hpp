#pragma once

#include <string>
#include <string_view>

#include "geowealth/nn.hpp"

namespace geowealth::nn {

inline constexpr std::string_view kCheckpointMagic = "GWPARAM1";

/// Binary parameter file, all integers and reals little-endian:
///   "GWPARAM1", u8 architecture (1 = MLP, 2 = GCN), u32 layer count, then per
///   layer: u32 rows, u32 cols, rows*cols f64 weights (row-major), u32 bias
///   length, f64 biases.
void save_params(const std::string& path, const ModelParams& params);
ModelParams load_params(const std::string& path);

std::string encode_params(const ModelParams& params);
ModelParams decode_params(std::string_view bytes, const std::string& source = "<bytes>");

}  // namespace geowealth::nn

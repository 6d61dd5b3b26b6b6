#pragma once

#include <cstddef>

#include "geowealth/nn.hpp"

namespace geowealth::nn {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Moment buffers shaped like the parameters they update.
struct AdamWState {
  AdamWConfig config;
  std::size_t step = 0;
  ModelParams m;
  ModelParams v;

  AdamWState(const ModelParams& like, const AdamWConfig& cfg)
      : config(cfg), m(like.zeros_like()), v(like.zeros_like()) {}
};

/// Bias-corrected Adam step with decoupled weight decay. Decay shrinks
/// weight matrices only; biases are not decayed.
void adamw_step(ModelParams& params, const ModelParams& grads, AdamWState& state);

}  // namespace geowealth::nn

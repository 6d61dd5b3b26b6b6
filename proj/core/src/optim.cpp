#include "geowealth/optim.hpp"

#include <cmath>

#include "geowealth/error.hpp"

namespace geowealth::nn {
namespace {

template <typename P, typename G, typename M>
void update(P& param, const G& grad, M& m, M& v, const AdamWConfig& c, double correction1,
            double correction2, bool decay) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
    throw ShapeError("adamw_step: gradient shape mismatch");
  }
  if (decay && c.weight_decay != 0.0) param *= (1.0 - c.lr * c.weight_decay);
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
  const auto m_hat = m.array() / correction1;
  const auto v_hat = v.array() / correction2;
  param.array() -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
}

}  // namespace

void adamw_step(ModelParams& params, const ModelParams& grads, AdamWState& state) {
  if (params.layers.size() != grads.layers.size() || params.layers.size() != state.m.layers.size()) {
    throw ShapeError("adamw_step: layer count mismatch");
  }
  ++state.step;
  const auto& c = state.config;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& p = params.layers[i];
    const auto& g = grads.layers[i];
    update(p.weight, g.weight, state.m.layers[i].weight, state.v.layers[i].weight, c, correction1,
           correction2, /*decay=*/true);
    update(p.bias, g.bias, state.m.layers[i].bias, state.v.layers[i].bias, c, correction1,
           correction2, /*decay=*/false);
  }
}

}  // namespace geowealth::nn

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "geowealth/nn.hpp"
#include "geowealth/rng.hpp"

namespace geowealth::nn {

struct LossAndGrad {
  /// Extended precision so that central differences resolve small gradients.
  long double loss = 0.0L;
  ModelParams grad;
  /// Identifies the piecewise-smooth region (e.g. ReLU on/off pattern) the
  /// parameters fall in. Probes landing in another region are not compared.
  std::uint64_t region = 0;
};

/// Hash of the on/off pattern of every ReLU unit recorded in `tape`.
std::uint64_t activation_pattern(const Tape& tape);

/// Loss and analytic gradient at the given parameters. Must be deterministic.
using LossClosure = std::function<LossAndGrad(const ModelParams&)>;

struct GradCheckOptions {
  std::size_t samples = 200;
  double step = 1e-5;
  double tolerance = 1e-4;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  /// Sampled parameters replaced because a probe crossed a region boundary.
  std::size_t skipped = 0;
  bool passed = false;
};

/// Central finite differences on a random subsample of parameters (all of
/// them when there are fewer than `samples`). A parameter whose +-step probes
/// change `region` is replaced by another one. Relative error is
/// |a - n| / max(|a|, |n|, 1e-8). Throws Error if two evaluations at the same
/// point disagree.
GradCheckResult grad_check(const LossClosure& closure, const ModelParams& params, Rng& rng,
                           const GradCheckOptions& options = {});

enum class LossKind { MSE, Fuzzy };

std::string_view to_string(LossKind kind);

/// A self-contained random regression instance for gradient checking.
struct GradCheckProblem {
  Architecture arch = Architecture::MLP;
  LossKind loss = LossKind::MSE;
  std::size_t nodes = 0;
  ModelParams params;
  LossClosure closure;
};

/// Random inputs, graph (GCN only), targets or fuzzy assignments over
/// between 2 and `max_nodes` nodes, with perturbed initial parameters.
GradCheckProblem random_gradcheck_problem(Architecture arch, LossKind loss, Rng& rng,
                                          std::size_t max_nodes = 50,
                                          const ModelShape& shape = {});

}  // namespace geowealth::nn

#include "geowealth/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "geowealth/csr.hpp"
#include "geowealth/error.hpp"
#include "geowealth/losses.hpp"

namespace geowealth::nn {

GradCheckResult grad_check(const LossClosure& closure, const ModelParams& params, Rng& rng,
                           const GradCheckOptions& options) {
  const LossAndGrad base = closure(params);
  const LossAndGrad again = closure(params);
  if (base.loss != again.loss) throw Error("grad_check: loss closure is not deterministic");

  const std::size_t total = params.parameter_count();
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));

  GradCheckResult result;
  ModelParams probe = params;
  for (std::size_t idx : order) {
    if (result.checked >= options.samples) break;
    const double original = probe.flat(idx);
    probe.flat(idx) = original + options.step;
    const LossAndGrad up = closure(probe);
    probe.flat(idx) = original - options.step;
    const LossAndGrad down = closure(probe);
    probe.flat(idx) = original;
    if (up.region != base.region || down.region != base.region) {
      ++result.skipped;
      continue;
    }

    const double numeric =
        static_cast<double>((up.loss - down.loss) / (2.0L * static_cast<long double>(options.step)));
    const double analytic = base.grad.flat(idx);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    const double err = std::abs(analytic - numeric) / denom;
    if (err > result.max_relative_error || result.checked == 0) {
      result.max_relative_error = err;
      result.worst_index = idx;
    }
    ++result.checked;
  }
  result.passed = result.max_relative_error <= options.tolerance;
  return result;
}

std::uint64_t activation_pattern(const Tape& tape) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Matrix* m : {&tape.hidden1, &tape.hidden2}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      h ^= m->data()[i] > 0.0 ? 1U : 0U;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string_view to_string(LossKind kind) { return kind == LossKind::MSE ? "mse" : "fuzzy"; }

namespace {

using Real = long double;

struct Instance {
  std::size_t n = 0;
  Matrix x;
  std::unique_ptr<Propagation> prop;
  std::vector<Real> dense_ahat;  // n x n, empty for MLP
  std::vector<std::size_t> rows;
  std::vector<double> targets;
  std::vector<FuzzyAssignment> assignments;
};

// One dense layer in extended precision: out = (Ahat?) * in * W + b.
std::vector<Real> dense_layer(const Instance& d, const std::vector<Real>& in, std::size_t d_in,
                              const Layer& layer, bool propagate) {
  const std::size_t n = d.n;
  std::vector<Real> mixed = in;
  if (propagate) {
    mixed.assign(n * d_in, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const Real a = d.dense_ahat[i * n + j];
        if (a == 0.0L) continue;
        for (std::size_t k = 0; k < d_in; ++k) mixed[i * d_in + k] += a * in[j * d_in + k];
      }
    }
  }
  const auto d_out = static_cast<std::size_t>(layer.weight.cols());
  std::vector<Real> out(n * d_out);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < d_out; ++o) {
      Real acc = layer.bias[static_cast<Eigen::Index>(o)];
      for (std::size_t k = 0; k < d_in; ++k) {
        acc += mixed[i * d_in + k] *
               Real(layer.weight(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(o)));
      }
      out[i * d_out + o] = acc;
    }
  }
  return out;
}

// Loss and ReLU pattern from an extended-precision forward pass, so finite
// differences are not swamped by rounding of the loss.
std::pair<Real, std::uint64_t> reference_loss(const Instance& d, const ModelParams& params,
                                              LossKind kind) {
  const bool gcn = params.arch == Architecture::GCN;
  const auto d_in = static_cast<std::size_t>(d.x.cols());
  std::vector<Real> h(d.x.data(), d.x.data() + d.x.size());
  std::uint64_t pattern = 0xcbf29ce484222325ULL;
  std::size_t width = d_in;
  for (std::size_t l = 0; l < 2; ++l) {
    h = dense_layer(d, h, width, params.layers[l], gcn);
    width = static_cast<std::size_t>(params.layers[l].weight.cols());
    for (auto& v : h) {
      v = v > 0.0L ? v : 0.0L;
      pattern ^= v > 0.0L ? 1U : 0U;
      pattern *= 0x100000001b3ULL;
    }
  }
  const std::vector<Real> out = dense_layer(d, h, width, params.layers[2], false);

  Real loss = 0.0L;
  if (kind == LossKind::MSE) {
    for (std::size_t k = 0; k < d.rows.size(); ++k) {
      const Real r = out[d.rows[k]] - Real(d.targets[k]);
      loss += r * r;
    }
    loss /= Real(d.rows.size());
  } else {
    for (const auto& a : d.assignments) {
      for (const auto& c : a.candidates) {
        const Real r = out[c.node] - Real(d.targets[a.label_index]);
        loss += Real(c.probability) * r * r;
      }
    }
    loss /= Real(d.assignments.size());
  }
  return {loss, pattern};
}

}  // namespace

GradCheckProblem random_gradcheck_problem(Architecture arch, LossKind loss, Rng& rng,
                                          std::size_t max_nodes, const ModelShape& shape) {
  if (max_nodes < 2) throw DomainError("random_gradcheck_problem needs max_nodes >= 2");
  const std::size_t n = 2 + rng.below(max_nodes - 1);

  auto data = std::make_shared<Instance>();
  data->n = n;
  data->x = Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(shape.input_dim));
  for (Eigen::Index i = 0; i < data->x.size(); ++i) data->x.data()[i] = rng.normal();

  if (arch == Architecture::GCN) {
    std::vector<WeightedEdge> edges;
    const double p = std::min(1.0, 3.0 / static_cast<double>(n));
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        if (rng.bernoulli(p)) edges.push_back({a, b, rng.uniform(0.1, 10.0)});
      }
    }
    data->prop = std::make_unique<Propagation>(Csr::from_undirected(n, edges));
    std::vector<Real> deg(n, 1.0L);
    for (const auto& e : edges) {
      deg[e.src] += e.weight;
      deg[e.dst] += e.weight;
    }
    data->dense_ahat.assign(n * n, 0.0L);
    for (std::size_t i = 0; i < n; ++i) data->dense_ahat[i * n + i] = 1.0L / deg[i];
    for (const auto& e : edges) {
      const Real a = Real(e.weight) / std::sqrt(deg[e.src] * deg[e.dst]);
      data->dense_ahat[e.src * n + e.dst] = a;
      data->dense_ahat[e.dst * n + e.src] = a;
    }
  }

  if (loss == LossKind::MSE) {
    for (std::size_t i = 0; i < n; ++i) {
      if (arch == Architecture::MLP || rng.bernoulli(0.6)) data->rows.push_back(i);
    }
    if (data->rows.empty()) data->rows.push_back(rng.below(n));
    for (std::size_t k = 0; k < data->rows.size(); ++k) data->targets.push_back(rng.normal(0.0, 2.0));
  } else {
    const std::size_t n_labels = 1 + rng.below(std::max<std::size_t>(1, n / 2));
    for (std::size_t j = 0; j < n_labels; ++j) {
      FuzzyAssignment a;
      a.label_index = j;
      const std::size_t k = 1 + rng.below(std::min<std::size_t>(4, n));
      double total = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double w = rng.uniform(0.05, 1.0);
        a.candidates.push_back({rng.below(n), w});
        total += w;
      }
      for (auto& c : a.candidates) c.probability /= total;
      data->assignments.push_back(std::move(a));
      data->targets.push_back(rng.normal(0.0, 2.0));
    }
  }

  GradCheckProblem problem;
  problem.arch = arch;
  problem.loss = loss;
  problem.nodes = n;
  problem.params = init_params(arch, shape, rng);
  for (auto& layer : problem.params.layers) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.normal(0.0, 0.1);
  }
  problem.closure = [data, loss](const ModelParams& params) {
    Tape tape;
    const Matrix out = forward(params, data->x, data->prop.get(), &tape);
    const std::vector<double> pred_all(out.data(), out.data() + out.rows());
    Matrix d_out = Matrix::Zero(out.rows(), 1);
    if (loss == LossKind::MSE) {
      std::vector<double> pred;
      for (std::size_t r : data->rows) pred.push_back(pred_all[r]);
      const auto l = mse_loss(pred, data->targets);
      for (std::size_t k = 0; k < data->rows.size(); ++k) {
        d_out(static_cast<Eigen::Index>(data->rows[k]), 0) += l.grad[k];
      }
    } else {
      const auto l = fuzzy_loss(pred_all, data->assignments, data->targets);
      for (std::size_t i = 0; i < l.grad.size(); ++i) d_out(static_cast<Eigen::Index>(i), 0) = l.grad[i];
    }
    LossAndGrad result;
    const auto [ref, pattern] = reference_loss(*data, params, loss);
    result.loss = ref;
    result.region = pattern;
    result.grad = params.zeros_like();
    backward(params, tape, data->prop.get(), d_out, result.grad);
    return result;
  };
  return problem;
}

}  // namespace geowealth::nn

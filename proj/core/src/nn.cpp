#include "geowealth/nn.hpp"

#include <cmath>
#include <string>

#include "geowealth/error.hpp"

namespace geowealth::nn {
namespace {

Matrix relu(const Matrix& z) { return z.cwiseMax(0.0); }

// dz = dh where the activation was positive; ReLU'(0) is taken as 0.
Matrix relu_backward(const Matrix& dh, const Matrix& activated) {
  return (activated.array() > 0.0).select(dh, 0.0);
}

Layer zero_layer(std::size_t in, std::size_t out) {
  return Layer{Matrix::Zero(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out)),
               RowVector::Zero(static_cast<Eigen::Index>(out))};
}

Matrix affine(const Matrix& x, const Layer& layer) {
  Matrix out = x * layer.weight;
  out.rowwise() += layer.bias;
  return out;
}

void require_width(const Matrix& x, const Layer& layer, std::string_view what) {
  if (x.cols() != layer.weight.rows()) {
    throw ShapeError(std::string(what) + ": input has " + std::to_string(x.cols()) +
                     " columns, layer expects " + std::to_string(layer.weight.rows()));
  }
}

}  // namespace

std::string_view to_string(Architecture arch) {
  return arch == Architecture::MLP ? "mlp" : "gcn";
}

ModelParams ModelParams::zeros(Architecture arch, const ModelShape& shape) {
  ModelParams p;
  p.arch = arch;
  p.layers.push_back(zero_layer(shape.input_dim, shape.hidden_dim));
  p.layers.push_back(zero_layer(shape.hidden_dim, shape.hidden_dim));
  p.layers.push_back(zero_layer(shape.hidden_dim, shape.output_dim));
  return p;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams p;
  p.arch = arch;
  for (const auto& l : layers) p.layers.push_back(zero_layer(l.weight.rows(), l.weight.cols()));
  return p;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

ModelShape ModelParams::shape() const {
  if (layers.size() != 3) throw ShapeError("model must have exactly three layers");
  return ModelShape{static_cast<std::size_t>(layers[0].weight.rows()),
                    static_cast<std::size_t>(layers[0].weight.cols()),
                    static_cast<std::size_t>(layers[2].weight.cols())};
}

double& ModelParams::flat(std::size_t index) {
  for (auto& l : layers) {
    const auto w = static_cast<std::size_t>(l.weight.size());
    if (index < w) return l.weight.data()[index];
    index -= w;
    const auto b = static_cast<std::size_t>(l.bias.size());
    if (index < b) return l.bias.data()[index];
    index -= b;
  }
  throw ShapeError("flat parameter index out of range");
}

double ModelParams::flat(std::size_t index) const {
  return const_cast<ModelParams&>(*this).flat(index);
}

void ModelParams::check_shape(Architecture expected) const {
  if (arch != expected) {
    throw ShapeError("expected " + std::string(to_string(expected)) + " parameters, got " +
                     std::string(to_string(arch)));
  }
  if (layers.size() != 3) throw ShapeError("model must have exactly three layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].bias.size() != layers[i].weight.cols()) {
      throw ShapeError("layer " + std::to_string(i) + ": bias length does not match weight");
    }
    if (i > 0 && layers[i].weight.rows() != layers[i - 1].weight.cols()) {
      throw ShapeError("layer " + std::to_string(i) + ": input width does not match previous layer");
    }
  }
}

ModelParams init_params(Architecture arch, const ModelShape& shape, Rng& rng) {
  ModelParams p = ModelParams::zeros(arch, shape);
  for (auto& l : p.layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(l.weight.rows()));
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) {
      l.weight.data()[i] = rng.uniform(-bound, bound);
    }
  }
  return p;
}

Propagation::Propagation(const Csr& adjacency) {
  const std::size_t n = adjacency.num_rows();
  std::vector<double> degree(n, 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t p = adjacency.offsets[r]; p < adjacency.offsets[r + 1]; ++p) {
      const double w = adjacency.weights[p];
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw DomainError("graph convolution needs positive finite edge weights");
      }
      degree[r] += w;
    }
  }
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);

  offsets_.assign(n + 1, 0);
  columns_.reserve(adjacency.num_entries() + n);
  values_.reserve(adjacency.num_entries() + n);
  for (std::size_t r = 0; r < n; ++r) {
    bool self_done = false;
    for (std::size_t p = adjacency.offsets[r]; p < adjacency.offsets[r + 1]; ++p) {
      const std::size_t c = adjacency.columns[p];
      if (!self_done && c > r) {
        columns_.push_back(r);
        values_.push_back(inv_sqrt[r] * inv_sqrt[r]);
        self_done = true;
      }
      columns_.push_back(c);
      values_.push_back(inv_sqrt[r] * adjacency.weights[p] * inv_sqrt[c]);
    }
    if (!self_done) {
      columns_.push_back(r);
      values_.push_back(inv_sqrt[r] * inv_sqrt[r]);
    }
    offsets_[r + 1] = columns_.size();
  }
}

Matrix Propagation::apply(const Matrix& x) const {
  if (static_cast<std::size_t>(x.rows()) != size()) {
    throw ShapeError("propagation: feature rows do not match graph size");
  }
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (std::size_t r = 0; r < size(); ++r) {
    auto row = out.row(static_cast<Eigen::Index>(r));
    for (std::size_t p = offsets_[r]; p < offsets_[r + 1]; ++p) {
      row.noalias() += values_[p] * x.row(static_cast<Eigen::Index>(columns_[p]));
    }
  }
  return out;
}

Matrix Propagation::apply_transpose(const Matrix& x) const {
  if (static_cast<std::size_t>(x.rows()) != size()) {
    throw ShapeError("propagation: feature rows do not match graph size");
  }
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (std::size_t r = 0; r < size(); ++r) {
    const auto row = x.row(static_cast<Eigen::Index>(r));
    for (std::size_t p = offsets_[r]; p < offsets_[r + 1]; ++p) {
      out.row(static_cast<Eigen::Index>(columns_[p])).noalias() += values_[p] * row;
    }
  }
  return out;
}

Matrix Propagation::dense() const {
  const auto n = static_cast<Eigen::Index>(size());
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t r = 0; r < size(); ++r) {
    for (std::size_t p = offsets_[r]; p < offsets_[r + 1]; ++p) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(columns_[p])) = values_[p];
    }
  }
  return out;
}

Matrix gcn_conv(const Matrix& weight, const RowVector& bias, const Matrix& x,
                const Propagation& propagation) {
  if (x.cols() != weight.rows() || bias.size() != weight.cols()) {
    throw ShapeError("gcn_conv: shape mismatch");
  }
  require_finite(x, "gcn_conv input");
  Matrix out = propagation.apply(x) * weight;
  out.rowwise() += bias;
  return out;
}

Matrix gcn_conv(const Matrix& weight, const RowVector& bias, const Matrix& x, const Csr& adjacency) {
  return gcn_conv(weight, bias, x, Propagation(adjacency));
}

Matrix mlp_forward(const ModelParams& params, const Matrix& x, Tape* tape) {
  params.check_shape(Architecture::MLP);
  require_width(x, params.layers[0], "mlp_forward");
  require_finite(x, "mlp_forward input");
  Matrix h1 = relu(affine(x, params.layers[0]));
  Matrix h2 = relu(affine(h1, params.layers[1]));
  Matrix out = affine(h2, params.layers[2]);
  if (tape) {
    tape->input = x;
    tape->mixed1 = h1;
    tape->hidden1 = std::move(h1);
    tape->hidden2 = std::move(h2);
  }
  return out;
}

Matrix gcn_forward(const ModelParams& params, const Matrix& x, const Propagation& propagation,
                   Tape* tape) {
  params.check_shape(Architecture::GCN);
  require_width(x, params.layers[0], "gcn_forward");
  require_finite(x, "gcn_forward input");
  Matrix ax = propagation.apply(x);
  Matrix h1 = relu(affine(ax, params.layers[0]));
  Matrix ah1 = propagation.apply(h1);
  Matrix h2 = relu(affine(ah1, params.layers[1]));
  Matrix out = affine(h2, params.layers[2]);
  if (tape) {
    tape->input = std::move(ax);
    tape->hidden1 = std::move(h1);
    tape->mixed1 = std::move(ah1);
    tape->hidden2 = std::move(h2);
  }
  return out;
}

Matrix forward(const ModelParams& params, const Matrix& x, const Propagation* propagation,
               Tape* tape) {
  if (params.arch == Architecture::MLP) return mlp_forward(params, x, tape);
  if (!propagation) throw ShapeError("gcn forward needs a graph");
  return gcn_forward(params, x, *propagation, tape);
}

void backward(const ModelParams& params, const Tape& tape, const Propagation* propagation,
              const Matrix& d_out, ModelParams& grads) {
  const bool graph = params.arch == Architecture::GCN;
  if (graph && !propagation) throw ShapeError("gcn backward needs a graph");
  if (d_out.rows() != tape.hidden2.rows() || d_out.cols() != params.layers[2].weight.cols()) {
    throw ShapeError("backward: output gradient shape mismatch");
  }
  require_finite(d_out, "output gradient");
  if (grads.layers.size() != 3) grads = params.zeros_like();
  grads.arch = params.arch;

  const auto& l2 = params.layers[1];
  const auto& l3 = params.layers[2];

  grads.layers[2].weight.noalias() = tape.hidden2.transpose() * d_out;
  grads.layers[2].bias = d_out.colwise().sum();

  const Matrix dz2 = relu_backward(d_out * l3.weight.transpose(), tape.hidden2);
  grads.layers[1].weight.noalias() = tape.mixed1.transpose() * dz2;
  grads.layers[1].bias = dz2.colwise().sum();

  Matrix dh1 = dz2 * l2.weight.transpose();
  if (graph) dh1 = propagation->apply_transpose(dh1);
  const Matrix dz1 = relu_backward(dh1, tape.hidden1);
  grads.layers[0].weight.noalias() = tape.input.transpose() * dz1;
  grads.layers[0].bias = dz1.colwise().sum();
}

}  // namespace geowealth::nn

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "geowealth/csr.hpp"
#include "geowealth/rng.hpp"
#include "geowealth/tensor.hpp"

namespace geowealth::nn {

enum class Architecture : std::uint8_t { MLP = 1, GCN = 2 };

std::string_view to_string(Architecture arch);

struct Layer {
  Matrix weight;  // d_in x d_out, applied as x * W
  RowVector bias;
};

struct ModelShape {
  std::size_t input_dim = 64;
  std::size_t hidden_dim = 128;
  std::size_t output_dim = 1;
};

/// Three layers for both architectures:
///   MLP: linear-relu, linear-relu, linear
///   GCN: conv-relu,   conv-relu,   linear
/// Identical shapes mean identical parameter counts.
struct ModelParams {
  Architecture arch = Architecture::MLP;
  std::vector<Layer> layers;

  static ModelParams zeros(Architecture arch, const ModelShape& shape = {});
  ModelParams zeros_like() const;

  std::size_t parameter_count() const;
  ModelShape shape() const;

  /// Parameters in a fixed flat order: per layer, weights row-major then bias.
  double& flat(std::size_t index);
  double flat(std::size_t index) const;

  void check_shape(Architecture expected) const;
};

/// Kaiming-uniform (fan-in, ReLU gain) weights and zero biases.
ModelParams init_params(Architecture arch, const ModelShape& shape, Rng& rng);

/// Symmetrically normalised adjacency with unit self-loops,
/// D^-1/2 (A + I) D^-1/2, where D holds weighted degrees of A + I.
class Propagation {
 public:
  explicit Propagation(const Csr& adjacency);

  std::size_t size() const noexcept { return offsets_.size() - 1; }
  Matrix apply(const Matrix& x) const;
  Matrix apply_transpose(const Matrix& x) const;
  /// Dense copy, for tests and small graphs.
  Matrix dense() const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> columns_;
  std::vector<double> values_;
};

/// One graph convolution: Ahat * X * W + b.
Matrix gcn_conv(const Matrix& weight, const RowVector& bias, const Matrix& x,
                const Propagation& propagation);
Matrix gcn_conv(const Matrix& weight, const RowVector& bias, const Matrix& x, const Csr& adjacency);

/// Activations kept for the backward pass.
struct Tape {
  Matrix input;      // X (MLP) or Ahat*X (GCN)
  Matrix hidden1;    // relu output of layer 1
  Matrix mixed1;     // hidden1 (MLP) or Ahat*hidden1 (GCN)
  Matrix hidden2;    // relu output of layer 2
};

Matrix mlp_forward(const ModelParams& params, const Matrix& x, Tape* tape = nullptr);
Matrix gcn_forward(const ModelParams& params, const Matrix& x, const Propagation& propagation,
                   Tape* tape = nullptr);

/// Dispatches on params.arch; `propagation` is ignored for the MLP and
/// required for the GCN.
Matrix forward(const ModelParams& params, const Matrix& x, const Propagation* propagation,
               Tape* tape = nullptr);

/// Gradients of sum(d_out .* output) with respect to every parameter, given
/// the tape from the matching forward call. Overwrites `grads`.
void backward(const ModelParams& params, const Tape& tape, const Propagation* propagation,
              const Matrix& d_out, ModelParams& grads);

}  // namespace geowealth::nn

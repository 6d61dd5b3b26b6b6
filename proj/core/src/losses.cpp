#include "geowealth/losses.hpp"

#include <cmath>
#include <string>

#include "geowealth/error.hpp"
#include "geowealth/tensor.hpp"

namespace geowealth::nn {

LossResult mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw ShapeError("mse_loss: length mismatch");
  if (pred.empty()) throw DomainError("mse_loss: empty input");
  require_finite(pred, "mse_loss prediction");
  require_finite(target, "mse_loss target");
  const auto n = static_cast<double>(pred.size());
  LossResult out;
  out.grad.resize(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - target[i];
    sum += r * r;
    out.grad[i] = 2.0 * r / n;
  }
  out.loss = sum / n;
  return out;
}

LossResult fuzzy_loss(std::span<const double> pred_by_node,
                      std::span<const FuzzyAssignment> assignments,
                      std::span<const double> labels) {
  if (assignments.empty()) throw DomainError("fuzzy_loss: no assignments");
  require_finite(pred_by_node, "fuzzy_loss prediction");
  require_finite(labels, "fuzzy_loss labels");
  const auto n = static_cast<double>(assignments.size());

  // Accumulate per-node residual mass first so the gradient for a node shared
  // by several clusters is one sum; with unit singleton assignments every
  // operation below reduces to the one mse_loss performs.
  std::vector<double> residual_mass(pred_by_node.size(), 0.0);
  double sum = 0.0;
  for (const auto& a : assignments) {
    if (a.label_index >= labels.size()) throw ShapeError("fuzzy_loss: label index out of range");
    if (a.candidates.empty()) throw DomainError("fuzzy_loss: assignment without candidates");
    const double y = labels[a.label_index];
    double total_p = 0.0;
    double term = 0.0;
    for (const auto& c : a.candidates) {
      if (c.node >= pred_by_node.size()) throw ShapeError("fuzzy_loss: candidate node out of range");
      if (!(c.probability >= 0.0)) throw DomainError("fuzzy_loss: negative probability");
      total_p += c.probability;
      const double r = pred_by_node[c.node] - y;
      term += c.probability * (r * r);
      residual_mass[c.node] += c.probability * r;
    }
    if (std::abs(total_p - 1.0) > 1e-9) {
      throw DomainError("fuzzy_loss: assignment for label " + std::to_string(a.label_index) +
                        " sums to " + std::to_string(total_p));
    }
    sum += term;
  }
  LossResult out;
  out.loss = sum / n;
  out.grad.resize(pred_by_node.size());
  for (std::size_t i = 0; i < pred_by_node.size(); ++i) out.grad[i] = 2.0 * residual_mass[i] / n;
  return out;
}

std::vector<double> fuzzy_expectation(std::span<const double> pred_by_node,
                                      std::span<const FuzzyAssignment> assignments) {
  std::vector<double> out;
  out.reserve(assignments.size());
  for (const auto& a : assignments) {
    double acc = 0.0;
    for (const auto& c : a.candidates) {
      if (c.node >= pred_by_node.size()) throw ShapeError("fuzzy_expectation: node out of range");
      acc += c.probability * pred_by_node[c.node];
    }
    out.push_back(acc);
  }
  return out;
}

}  // namespace geowealth::nn

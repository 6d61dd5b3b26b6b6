#pragma once

#include <span>
#include <vector>

#include "geowealth/graph.hpp"

namespace geowealth::nn {

struct LossResult {
  double loss = 0.0;
  /// d loss / d prediction, same length as the prediction vector.
  std::vector<double> grad;
};

/// mean((pred - target)^2); grad = 2 (pred - target) / n.
LossResult mse_loss(std::span<const double> pred, std::span<const double> target);

/// Displacement-aware fuzzy loss
///   (1 / N_l) sum_j sum_i P_ji (pred_i - y_j)^2
/// with N_l = assignments.size(). `pred_by_node` is indexed by candidate node
/// id and `labels` by FuzzyAssignment::label_index. Each assignment must have
/// non-negative probabilities summing to 1 within 1e-9.
LossResult fuzzy_loss(std::span<const double> pred_by_node,
                      std::span<const FuzzyAssignment> assignments,
                      std::span<const double> labels);

/// P-weighted mean of candidate predictions per assignment.
std::vector<double> fuzzy_expectation(std::span<const double> pred_by_node,
                                      std::span<const FuzzyAssignment> assignments);

}  // namespace geowealth::nn

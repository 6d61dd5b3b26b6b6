#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace geowealth {

struct WeightedEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  double weight = 0.0;
};

/// Compressed sparse rows with per-entry weights. Columns within a row are
/// strictly increasing.
struct Csr {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> columns;
  std::vector<double> weights;

  std::size_t num_rows() const noexcept { return offsets.size() - 1; }
  std::size_t num_entries() const noexcept { return columns.size(); }
  std::size_t degree(std::size_t row) const { return offsets[row + 1] - offsets[row]; }
  std::span<const std::size_t> neighbors(std::size_t row) const {
    return std::span<const std::size_t>(columns).subspan(offsets[row], degree(row));
  }
  std::span<const double> row_weights(std::size_t row) const {
    return std::span<const double>(weights).subspan(offsets[row], degree(row));
  }

  /// Empty graph on n rows.
  static Csr empty(std::size_t n);

  /// Stores every edge in both directions. Repeated pairs collapse to one
  /// entry; their weights must agree. Self-edges and non-positive or
  /// non-finite weights are rejected.
  static Csr from_undirected(std::size_t n, std::span<const WeightedEdge> edges);

  /// Throws ValidationError describing the first structural problem.
  void validate() const;
  bool is_symmetric() const;

  friend bool operator==(const Csr&, const Csr&) = default;
};

/// Dense weight lookup; 0 when absent.
double edge_weight(const Csr& csr, std::size_t row, std::size_t col);

}  // namespace geowealth

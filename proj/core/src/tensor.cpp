#include "geowealth/tensor.hpp"

#include <cmath>
#include <string>

#include "geowealth/error.hpp"

namespace geowealth::nn {

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) throw NonFiniteError(std::string(what) + " contains NaN or Inf");
}

void require_finite(std::span<const double> v, std::string_view what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NonFiniteError(std::string(what) + " contains NaN or Inf");
  }
}

Matrix stack_rows(std::span<const std::vector<double>> rows) {
  if (rows.empty()) return Matrix(0, 0);
  const auto cols = static_cast<Eigen::Index>(rows.front().size());
  Matrix out(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols) {
      throw ShapeError("stack_rows: ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) out(static_cast<Eigen::Index>(i), c) = rows[i][c];
  }
  return out;
}

}  // namespace geowealth::nn

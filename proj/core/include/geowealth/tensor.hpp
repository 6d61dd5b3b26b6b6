#pragma once

#include <Eigen/Core>
#include <span>
#include <string_view>
#include <vector>

namespace geowealth::nn {

/// Row-major f64 matrix; rows are nodes/samples.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// Throws NonFiniteError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what);
void require_finite(std::span<const double> v, std::string_view what);

/// Gathers rows of a feature table into a matrix.
Matrix stack_rows(std::span<const std::vector<double>> rows);

inline std::span<const double> as_span(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace geowealth::nn

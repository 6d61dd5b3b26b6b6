#pragma once

#include <span>

namespace geowealth {

/// Stand-in for R^2 when the targets have zero variance but the residuals do
/// not; reports print it as "undefined".
inline constexpr double kUndefinedR2 = -1e12;

struct Metrics {
  double mae = 0.0;
  double r2 = 0.0;
  bool r2_defined = true;
};

/// MAE and coefficient of determination 1 - SS_res / SS_tot. R^2 is 1 when
/// both sums vanish.
Metrics evaluate(std::span<const double> pred, std::span<const double> target);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
};

Summary summarize(std::span<const double> values);

}  // namespace geowealth

#include "geowealth/metrics.hpp"

#include <cmath>

#include "geowealth/error.hpp"

namespace geowealth {

Metrics evaluate(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw ShapeError("evaluate: length mismatch");
  if (pred.empty()) throw DomainError("evaluate: empty input");
  const auto n = static_cast<double>(pred.size());
  double mean = 0.0;
  for (double t : target) mean += t;
  mean /= n;
  double abs_sum = 0.0;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - target[i];
    abs_sum += std::abs(r);
    ss_res += r * r;
    const double c = target[i] - mean;
    ss_tot += c * c;
  }
  Metrics m;
  m.mae = abs_sum / n;
  if (ss_tot == 0.0) {
    m.r2_defined = ss_res == 0.0;
    m.r2 = m.r2_defined ? 1.0 : kUndefinedR2;
  } else {
    m.r2 = 1.0 - ss_res / ss_tot;
  }
  return m;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw DomainError("summarize: empty input");
  const auto n = static_cast<double>(values.size());
  Summary s;
  for (double v : values) s.mean += v;
  s.mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(var / n);
  return s;
}

}  // namespace geowealth

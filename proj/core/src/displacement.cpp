#include "geowealth/displacement.hpp"

#include <cmath>
#include <numbers>

#include "geowealth/error.hpp"

namespace geowealth {

std::string_view to_string(ClusterType kind) {
  return kind == ClusterType::Urban ? "urban" : "rural";
}

void DisplacementModel::validate() const {
  if (!(urban_max > 0.0 && urban_max < rural_common_max && rural_common_max < rural_rare_max)) {
    throw ConfigError("displacement radii must satisfy 0 < urban < rural_common < rural_rare");
  }
  if (!(rural_rare_prob >= 0.0 && rural_rare_prob <= 1.0)) {
    throw ConfigError("rural_rare_prob must lie in [0, 1]");
  }
}

double DisplacementModel::max_radius(ClusterType kind) const {
  return kind == ClusterType::Urban ? urban_max : rural_rare_max;
}

double likelihood(const DisplacementModel& model, ClusterType kind, double d_km) {
  if (!(d_km >= 0.0)) throw DomainError("likelihood: distance must be non-negative");
  constexpr double pi = std::numbers::pi;
  if (kind == ClusterType::Urban) {
    return d_km <= model.urban_max ? 1.0 / (pi * model.urban_max * model.urban_max) : 0.0;
  }
  const double rare =
      model.rural_rare_prob / (pi * model.rural_rare_max * model.rural_rare_max);
  if (d_km <= model.rural_common_max) {
    const double common = (1.0 - model.rural_rare_prob) /
                          (pi * model.rural_common_max * model.rural_common_max);
    return common + rare;
  }
  return d_km <= model.rural_rare_max ? rare : 0.0;
}

Displacement sample_displacement(const DisplacementModel& model, ClusterType kind, Rng& rng) {
  Displacement out;
  out.bearing_rad = 2.0 * std::numbers::pi * rng.uniform();
  double max_km = model.urban_max;
  if (kind == ClusterType::Rural) {
    max_km = rng.bernoulli(model.rural_rare_prob) ? model.rural_rare_max : model.rural_common_max;
  }
  out.distance_km = max_km * rng.uniform();
  return out;
}

GeoPoint displace(const GeoPoint& origin, ClusterType kind, const DisplacementModel& model,
                  Rng& rng) {
  const Displacement step = sample_displacement(model, kind, rng);
  return destination(origin, step.bearing_rad, step.distance_km);
}

}  // namespace geowealth

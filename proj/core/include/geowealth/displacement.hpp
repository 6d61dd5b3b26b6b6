#pragma once

#include <string_view>

#include "geowealth/geo.hpp"
#include "geowealth/rng.hpp"

namespace geowealth {

enum class ClusterType { Urban, Rural };

std::string_view to_string(ClusterType kind);

/// DHS coordinate displacement parameters (km). Urban clusters move up to
/// `urban_max`; rural clusters up to `rural_common_max`, except a fraction
/// `rural_rare_prob` that may move up to `rural_rare_max`.
struct DisplacementModel {
  double urban_max = 2.0;
  double rural_common_max = 5.0;
  double rural_rare_max = 10.0;
  double rural_rare_prob = 0.01;

  void validate() const;
  double max_radius(ClusterType kind) const;
};

/// Density (per km^2) of observing a reported coordinate at distance `d_km`
/// from the true location: uniform over the urban disk, a two-disk mixture
/// for rural clusters. Breakpoints belong to the inner piece.
double likelihood(const DisplacementModel& model, ClusterType kind, double d_km);

struct Displacement {
  double bearing_rad = 0.0;
  double distance_km = 0.0;
};

/// Bearing uniform on [0, 2pi); distance uniform on [0, max) for the drawn
/// disk.
Displacement sample_displacement(const DisplacementModel& model, ClusterType kind, Rng& rng);

GeoPoint displace(const GeoPoint& origin, ClusterType kind, const DisplacementModel& model,
                  Rng& rng);

}  // namespace geowealth

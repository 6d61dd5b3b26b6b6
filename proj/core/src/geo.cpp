#include "geowealth/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "geowealth/error.hpp"

namespace geowealth {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

}  // namespace

double normalize_lon(double lon) {
  if (lon >= -180.0 && lon < 180.0) return lon;
  double wrapped = std::fmod(lon + 180.0, 360.0);
  if (wrapped < 0.0) wrapped += 360.0;
  wrapped -= 180.0;
  // fmod can land exactly on 360 after the correction above.
  if (wrapped >= 180.0) wrapped -= 360.0;
  return wrapped;
}

GeoPoint GeoPoint::make(double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon)) {
    throw DomainError("non-finite coordinate");
  }
  if (lat < -90.0 || lat > 90.0) {
    throw DomainError("latitude " + std::to_string(lat) + " outside [-90, 90]");
  }
  return GeoPoint{lat, normalize_lon(lon)};
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  const double lat1 = a.lat * kDegToRad;
  const double lat2 = b.lat * kDegToRad;
  const double half_dlat = 0.5 * (lat2 - lat1);
  const double half_dlon = 0.5 * (b.lon - a.lon) * kDegToRad;
  const double s_lat = std::sin(half_dlat);
  const double s_lon = std::sin(half_dlon);
  const double h = s_lat * s_lat + (std::cos(lat1) * std::cos(lat2)) * (s_lon * s_lon);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

GeoPoint destination(const GeoPoint& origin, double bearing_rad, double distance_km) {
  if (distance_km < 0.0 || !std::isfinite(distance_km) || !std::isfinite(bearing_rad)) {
    throw DomainError("destination: distance must be finite and non-negative");
  }
  if (distance_km == 0.0) return origin;
  const double delta = distance_km / kEarthRadiusKm;
  const double lat1 = origin.lat * kDegToRad;
  const double lon1 = origin.lon * kDegToRad;
  const double sin_lat2 = std::sin(lat1) * std::cos(delta) +
                          std::cos(lat1) * std::sin(delta) * std::cos(bearing_rad);
  const double lat2 = std::asin(std::clamp(sin_lat2, -1.0, 1.0));
  const double lon2 =
      lon1 + std::atan2(std::sin(bearing_rad) * std::sin(delta) * std::cos(lat1),
                        std::cos(delta) - std::sin(lat1) * sin_lat2);
  return GeoPoint{lat2 * kRadToDeg, normalize_lon(lon2 * kRadToDeg)};
}

bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  if (a.distance_km != b.distance_km) return a.distance_km < b.distance_km;
  return a.id < b.id;
}

SpatialIndex::SpatialIndex(std::vector<GeoPoint> points, double cell_deg)
    : points_(std::move(points)), cell_deg_(cell_deg) {
  if (!(cell_deg_ > 0.0) || cell_deg_ > 180.0) {
    throw DomainError("SpatialIndex: cell size must be in (0, 180] degrees");
  }
  rows_ = static_cast<std::size_t>(std::ceil(180.0 / cell_deg_));
  cols_ = static_cast<std::size_t>(std::ceil(360.0 / cell_deg_));

  std::vector<std::size_t> cell_of(points_.size());
  std::vector<std::size_t> counts(rows_ * cols_ + 1, 0);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const GeoPoint& p = points_[i];
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || p.lat < -90.0 || p.lat > 90.0 ||
        p.lon < -180.0 || p.lon >= 180.0) {
      throw DomainError("SpatialIndex: point " + std::to_string(i) + " is not a valid GeoPoint");
    }
    cell_of[i] = row_of(p.lat) * cols_ + col_of(p.lon);
    ++counts[cell_of[i] + 1];
  }
  for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
  cell_offsets_ = counts;
  cell_ids_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    cell_ids_[counts[cell_of[i]]++] = i;
  }
}

std::size_t SpatialIndex::row_of(double lat) const {
  const auto r = static_cast<std::ptrdiff_t>(std::floor((lat + 90.0) / cell_deg_));
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(r, 0, static_cast<std::ptrdiff_t>(rows_) - 1));
}

std::size_t SpatialIndex::col_of(double lon) const {
  const auto c = static_cast<std::ptrdiff_t>(std::floor((lon + 180.0) / cell_deg_));
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(cols_) - 1));
}

void SpatialIndex::collect(const GeoPoint& center, double radius_km,
                           std::vector<Neighbor>& out) const {
  out.clear();
  if (points_.empty()) return;

  // Angular radius of the query cap, padded so that rounding in the bounds
  // below can only enlarge the candidate set.
  const double delta = radius_km / kEarthRadiusKm * (1.0 + 1e-9) + 1e-12;
  const double delta_deg = delta * kRadToDeg;
  const double lat_lo = center.lat - delta_deg;
  const double lat_hi = center.lat + delta_deg;

  bool all_cols = delta >= std::numbers::pi / 2.0 || lat_lo <= -90.0 || lat_hi >= 90.0;
  double dlon_deg = 360.0;
  if (!all_cols) {
    const double ratio = std::sin(delta) / std::cos(center.lat * kDegToRad);
    if (ratio >= 1.0) {
      all_cols = true;
    } else {
      dlon_deg = std::asin(ratio) * kRadToDeg * (1.0 + 1e-9) + 1e-9;
    }
  }

  const std::size_t row_lo = row_of(std::max(-90.0, lat_lo));
  const std::size_t row_hi = row_of(std::min(90.0, lat_hi));

  std::size_t col_start = 0;
  std::size_t col_count = cols_;
  if (!all_cols) {
    const auto lo = static_cast<std::ptrdiff_t>(std::floor((center.lon - dlon_deg + 180.0) / cell_deg_)) - 1;
    const auto hi = static_cast<std::ptrdiff_t>(std::floor((center.lon + dlon_deg + 180.0) / cell_deg_)) + 1;
    const auto span = static_cast<std::size_t>(hi - lo + 1);
    if (span < cols_) {
      const auto n = static_cast<std::ptrdiff_t>(cols_);
      col_start = static_cast<std::size_t>(((lo % n) + n) % n);
      col_count = span;
    }
  }

  // One extra row on each side absorbs floor() edge effects.
  const std::size_t r0 = row_lo == 0 ? 0 : row_lo - 1;
  const std::size_t r1 = std::min(rows_ - 1, row_hi + 1);
  for (std::size_t r = r0; r <= r1; ++r) {
    for (std::size_t k = 0; k < col_count; ++k) {
      const std::size_t c = (col_start + k) % cols_;
      const std::size_t cell = r * cols_ + c;
      for (std::size_t pos = cell_offsets_[cell]; pos < cell_offsets_[cell + 1]; ++pos) {
        const std::size_t id = cell_ids_[pos];
        const double d = haversine_km(center, points_[id]);
        if (d <= radius_km) out.push_back(Neighbor{id, d});
      }
    }
  }
  std::sort(out.begin(), out.end(), neighbor_less);
}

std::vector<Neighbor> SpatialIndex::radius_query(const GeoPoint& center, double radius_km) const {
  if (!(radius_km > 0.0)) throw DomainError("radius_query: radius must be positive");
  std::vector<Neighbor> out;
  collect(center, radius_km, out);
  return out;
}

std::vector<Neighbor> SpatialIndex::knn_query(const GeoPoint& center, std::size_t k,
                                              double max_radius_km,
                                              std::optional<std::size_t> self) const {
  if (k == 0) throw DomainError("knn_query: k must be at least 1");
  if (!(max_radius_km > 0.0)) throw DomainError("knn_query: max_radius must be positive");

  // Grow the search disk until it holds k hits. Everything inside the disk is
  // found, so once k hits are in hand the first k are the true nearest.
  double radius = std::min(max_radius_km, 2.0 * cell_deg_ * kDegToRad * kEarthRadiusKm);
  std::vector<Neighbor> hits;
  for (;;) {
    collect(center, radius, hits);
    if (self) {
      std::erase_if(hits, [&](const Neighbor& n) { return n.id == *self; });
    }
    if (hits.size() >= k || radius >= max_radius_km) break;
    radius = std::min(max_radius_km, 2.0 * radius);
  }
  if (hits.size() > k) hits.resize(k);
  return hits;
}

std::vector<Neighbor> SpatialIndex::knn_of(std::size_t id, std::size_t k,
                                           double max_radius_km) const {
  if (id >= points_.size()) throw DomainError("knn_of: id out of range");
  return knn_query(points_[id], k, max_radius_km, id);
}

}  // namespace geowealth

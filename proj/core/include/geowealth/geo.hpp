#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace geowealth {

/// IUGG mean Earth radius.
inline constexpr double kEarthRadiusKm = 6371.0088;

/// Latitude/longitude in degrees. Longitude is kept in [-180, 180).
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  /// Validates latitude and wraps longitude. Throws DomainError on a latitude
  /// outside [-90, 90] or non-finite input.
  static GeoPoint make(double lat, double lon);

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

double normalize_lon(double lon);

/// Great-circle distance on the sphere of radius kEarthRadiusKm.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

/// Great-circle destination from `origin` after travelling `distance_km`
/// along the initial `bearing_rad` (clockwise from north).
GeoPoint destination(const GeoPoint& origin, double bearing_rad, double distance_km);

struct Neighbor {
  std::size_t id = 0;
  double distance_km = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Orders by distance, then by id.
bool neighbor_less(const Neighbor& a, const Neighbor& b);

/// Immutable uniform lat/lon grid over a point set.
///
/// Queries return exactly what a brute-force scan would: the candidate cells
/// only ever over-approximate the query disk and every candidate is checked
/// with haversine_km.
class SpatialIndex {
 public:
  explicit SpatialIndex(std::vector<GeoPoint> points, double cell_deg = 0.25);

  const std::vector<GeoPoint>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  /// All ids with distance <= radius_km, ascending by (distance, id).
  std::vector<Neighbor> radius_query(const GeoPoint& center, double radius_km) const;

  /// Up to k nearest ids with distance <= max_radius_km, ascending by
  /// (distance, id). When `self` names an indexed point it is skipped, so a
  /// node never lists itself; other points at distance 0 are kept.
  std::vector<Neighbor> knn_query(const GeoPoint& center, std::size_t k, double max_radius_km,
                                  std::optional<std::size_t> self = std::nullopt) const;

  /// knn_query centred on indexed point `id`, excluding it.
  std::vector<Neighbor> knn_of(std::size_t id, std::size_t k, double max_radius_km) const;

 private:
  std::size_t row_of(double lat) const;
  std::size_t col_of(double lon) const;
  void collect(const GeoPoint& center, double radius_km, std::vector<Neighbor>& out) const;

  std::vector<GeoPoint> points_;
  double cell_deg_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  // Cell-sorted point ids with per-cell offsets (CSR over cells).
  std::vector<std::size_t> cell_offsets_;
  std::vector<std::size_t> cell_ids_;
};

}  // namespace geowealth

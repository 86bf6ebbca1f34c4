#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hbo/error.hpp"
#include "hbo/ingest.hpp"

namespace hbo {

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance in km (haversine, spherical Earth).
inline double travel_distance(const GeoPoint& from, const GeoPoint& to) {
  if (!from.valid() || !to.valid()) throw DataError("invalid coordinates for travel distance");
  constexpr double deg = std::numbers::pi / 180.0;
  const double phi1 = from.lat * deg;
  const double phi2 = to.lat * deg;
  const double dphi = (to.lat - from.lat) * deg;
  const double dlambda = (to.lon - from.lon) * deg;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

}  // namespace hbo

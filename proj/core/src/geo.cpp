#include "soiverify/geo.hpp"

#include <algorithm>
#include <cmath>

namespace soiverify::geo {

namespace {
constexpr double kPi = 3.14159265358979323846;
double to_rad(double deg) { return deg * kPi / 180.0; }
}  // namespace

DistanceKm haversine(const GeoPoint& a, const GeoPoint& b) {
  const double lat1 = to_rad(a.lat_deg());
  const double lat2 = to_rad(b.lat_deg());
  const double dlat = lat2 - lat1;
  const double dlon = to_rad(b.lon_deg()) - to_rad(a.lon_deg());

  const double sin_lat = std::sin(dlat / 2.0);
  const double sin_lon = std::sin(dlon / 2.0);
  double h = sin_lat * sin_lat + std::cos(lat1) * std::cos(lat2) * sin_lon * sin_lon;
  h = std::clamp(h, 0.0, 1.0);

  const double central = 2.0 * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
  return DistanceKm{kEarthRadiusKm * central};
}

}  // namespace soiverify::geo

#pragma once

#include <stdexcept>

namespace soiverify::geo {

inline constexpr double kEarthRadiusKm = 6371.0088;
inline constexpr double kKmPerMile = 1.609344;

/// A point on the reference sphere. Construction validates the ranges
/// lat in [-90, 90], lon in [-180, 180]; +180 and -180 are the same meridian.
class GeoPoint {
 public:
  GeoPoint(double lat_deg, double lon_deg) : lat_deg_(lat_deg), lon_deg_(lon_deg) {
    if (!(lat_deg >= -90.0 && lat_deg <= 90.0)) {
      throw std::invalid_argument("latitude out of range [-90, 90]");
    }
    if (!(lon_deg >= -180.0 && lon_deg <= 180.0)) {
      throw std::invalid_argument("longitude out of range [-180, 180]");
    }
  }

  double lat_deg() const { return lat_deg_; }
  double lon_deg() const { return lon_deg_; }

  bool operator==(const GeoPoint& o) const {
    return lat_deg_ == o.lat_deg_ && lon_deg_ == o.lon_deg_;
  }

 private:
  double lat_deg_;
  double lon_deg_;
};

/// Non-negative great-circle distance. Never exceeds pi * kEarthRadiusKm
/// when produced by haversine().
struct DistanceKm {
  double value = 0.0;
};

/// Great-circle distance between two points on a sphere of radius
/// kEarthRadiusKm. Symmetric, zero for identical points.
DistanceKm haversine(const GeoPoint& a, const GeoPoint& b);

inline double miles_from_km(DistanceKm d) { return d.value / kKmPerMile; }
inline double km_from_miles(double mi) { return mi * kKmPerMile; }

}  // namespace soiverify::geo

#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>

#include "soiverify/geo.hpp"
#include "soiverify/time_util.hpp"

namespace soiverify::soi {

using Asn = std::uint32_t;

inline constexpr Asn kStarlinkAsn = 14593;

/// Speed of light in vacuum and in optical fiber (2/3 c), km/s.
inline constexpr double kSpeedOfLightKmPerS = 299'792.458;
inline constexpr double kFiberSpeedKmPerS = kSpeedOfLightKmPerS * 2.0 / 3.0;

enum class Medium { FIBER, FREE_SPACE };

/// Propagation speed in km/ms.
inline double speed_km_per_ms(Medium m) {
  return (m == Medium::FREE_SPACE ? kSpeedOfLightKmPerS : kFiberSpeedKmPerS) / 1000.0;
}

/// FREE_SPACE only for probes announced by Starlink (inter-satellite lasers);
/// everything else, including an empty ASN set, gets the fiber speed.
inline Medium classify_medium(const std::set<Asn>& probe_asns) {
  return probe_asns.count(kStarlinkAsn) ? Medium::FREE_SPACE : Medium::FIBER;
}

/// Theoretical absolute minimum round-trip time for a pair.
struct RttBound {
  double bound_ms = 0.0;
  double effective_distance_km = 0.0;
};

/// Subtracts the error radius from the direct distance, then converts the
/// remainder to a round-trip time at the given propagation speed (km/ms).
inline RttBound min_rtt_bound_at_speed(geo::DistanceKm distance, double error_radius_km,
                                       double speed) {
  if (distance.value < 0.0 || error_radius_km < 0.0) {
    throw std::invalid_argument("distance and error radius must be non-negative");
  }
  if (speed <= 0.0) {
    throw std::invalid_argument("propagation speed must be positive");
  }
  const double effective = std::max(0.0, distance.value - error_radius_km);
  return RttBound{2.0 * effective / speed, effective};
}

inline RttBound min_rtt_bound(geo::DistanceKm distance, double error_radius_km, Medium medium) {
  return min_rtt_bound_at_speed(distance, error_radius_km, speed_km_per_ms(medium));
}

/// True iff the measured RTT is strictly below the bound minus the guard.
inline bool is_violation(double measured_rtt_ms, const RttBound& bound, double guard_ms = 0.0) {
  if (measured_rtt_ms <= 0.0) {
    throw std::invalid_argument("measured RTT must be positive");
  }
  if (guard_ms < 0.0) {
    throw std::invalid_argument("guard must be non-negative");
  }
  return measured_rtt_ms < bound.bound_ms - guard_ms;
}

/// Farthest one-way distance the responder can be from the vantage point
/// given the measured RTT.
inline geo::DistanceKm max_radius_at_speed(double measured_rtt_ms, double speed) {
  if (measured_rtt_ms <= 0.0) {
    throw std::invalid_argument("measured RTT must be positive");
  }
  return geo::DistanceKm{measured_rtt_ms / 2.0 * speed};
}

inline geo::DistanceKm max_radius_km(double measured_rtt_ms, Medium medium) {
  return max_radius_at_speed(measured_rtt_ms, speed_km_per_ms(medium));
}

/// Minimum distance by which the responder must differ from the reported
/// location; defined only for violating pairs.
inline geo::DistanceKm distance_error_at_speed(double measured_rtt_ms, geo::DistanceKm d_theory,
                                               double speed) {
  if (!is_violation(measured_rtt_ms, min_rtt_bound_at_speed(d_theory, 0.0, speed))) {
    throw std::invalid_argument("distance_error requires a violating pair");
  }
  const double err = d_theory.value - max_radius_at_speed(measured_rtt_ms, speed).value;
  return geo::DistanceKm{err};
}

inline geo::DistanceKm distance_error(double measured_rtt_ms, geo::DistanceKm d_theory,
                                      Medium medium) {
  return distance_error_at_speed(measured_rtt_ms, d_theory, speed_km_per_ms(medium));
}

/// One physically-impossible pair observation.
struct ViolationRecord {
  std::int64_t probe_id = 0;
  std::string vp_id;
  timeutil::UnixSeconds window_start = 0;
  double measured_rtt_ms = 0.0;
  double bound_rtt_ms = 0.0;
  double margin_ms = 0.0;  // bound - measured, > 0
  double min_distance_error_km = 0.0;
};

}  // namespace soiverify::soi

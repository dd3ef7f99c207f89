#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "soiverify/ingest.hpp"
#include "soiverify/registry.hpp"
#include "soiverify/soi.hpp"

namespace soiverify::detector {

struct DetectionConfig {
  double guard_ms = 0.0;
  // RIPE skews reported probe pins by up to 1 km; fold that into the error
  // radius on the probe side.
  double probe_anonymization_km = 1.0;
  bool probe_anonymization_enabled = true;
  // Propagation speeds, overridable from config files.
  double fiber_speed_km_per_s = soi::kFiberSpeedKmPerS;
  double free_space_speed_km_per_s = soi::kSpeedOfLightKmPerS;

  double probe_allowance_km() const {
    return probe_anonymization_enabled ? probe_anonymization_km : 0.0;
  }

  double speed_km_per_ms(soi::Medium m) const {
    return (m == soi::Medium::FREE_SPACE ? free_space_speed_km_per_s : fiber_speed_km_per_s) /
           1000.0;
  }

  /// Hash over every constant that can affect results.
  std::uint64_t fingerprint() const;
};

struct CountryAggregate {
  std::string country_code;
  std::int64_t violator_count = 0;
  std::int64_t probe_count = 0;
  double violator_pct = 0.0;
};

struct DetectionReport {
  std::int64_t scanned_pairs = 0;
  std::set<registry::ProbeId> violating_probes;
  std::vector<soi::ViolationRecord> records;  // sorted by (probe, vp, window)
  std::vector<CountryAggregate> country_aggregates;
  timeutil::UnixSeconds generated_at = 0;
  std::uint64_t config_fingerprint = 0;
  std::int64_t skipped_unknown_probe = 0;
  std::int64_t skipped_unknown_vp = 0;
  std::int64_t skipped_no_location = 0;

  std::int64_t skipped_total() const {
    return skipped_unknown_probe + skipped_unknown_vp + skipped_no_location;
  }
};

/// The core scan: joins observations with probe locations and vantage points,
/// applies the physical minimum-RTT predicate, and collects violation records.
/// A probe is violating iff any of its pairs violates.
DetectionReport detect(const std::vector<ingest::LatencyObservation>& observations,
                       const std::map<registry::ProbeId, registry::ProbeRecord>& probes,
                       const registry::VpRegistry& vps, const DetectionConfig& config);

enum class CountryOrder { BY_COUNT, BY_PCT };

/// Country roll-up. BY_COUNT sorts descending by violator count, BY_PCT by
/// percentage; ties break by country code ascending. min_probes filters out
/// countries with fewer probes.
std::vector<CountryAggregate> aggregate_by_country(
    const DetectionReport& report,
    const std::map<registry::ProbeId, registry::ProbeRecord>& probes, CountryOrder order,
    std::int64_t min_probes = 1);

/// Empirical CDF over per-pair distance errors, ascending.
std::vector<std::pair<double, double>> error_cdf(const DetectionReport& report);

/// Per-probe maximum distance error, one entry per violating probe.
std::vector<std::pair<registry::ProbeId, double>> per_probe_max_error(
    const DetectionReport& report);

using CentroidTable = std::map<std::string, geo::GeoPoint>;

/// Parses `country_code,lat,lon` lines.
CentroidTable load_centroids(std::istream& in);

inline constexpr double kDefaultCentroidThresholdKm = 200.0;

/// True iff the reported location is farther than threshold_km from the
/// probe's country centroid. Annotation only, never a filter.
/// Throws std::out_of_range if the centroid table lacks the country.
bool centroid_distance_check(const registry::ProbeRecord& probe, const CentroidTable& centroids,
                             timeutil::UnixSeconds at,
                             double threshold_km = kDefaultCentroidThresholdKm);

}  // namespace soiverify::detector

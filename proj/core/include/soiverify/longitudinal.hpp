#pragma once

#include <map>
#include <optional>
#include <vector>

#include "soiverify/detector.hpp"
#include "soiverify/registry.hpp"

namespace soiverify::longitudinal {

/// Per-probe view of the measurement timeline: windows where the probe
/// responded at all and windows where at least one pair violated.
struct ProbeTimeline {
  registry::ProbeId probe_id = 0;
  std::vector<timeutil::UnixSeconds> responding_windows;  // sorted ascending
  std::vector<timeutil::UnixSeconds> violating_windows;   // sorted, subset of responding
};

enum class Resolution { LOCATION_UPDATE, DISCONNECTED, MEASUREMENT_CHANGE, ONGOING };

const char* to_string(Resolution r);

struct ViolationEpisode {
  registry::ProbeId probe_id = 0;
  timeutil::UnixSeconds first_violation = 0;
  timeutil::UnixSeconds last_violation = 0;
  Resolution resolution = Resolution::ONGOING;
  std::optional<geo::GeoPoint> location_before;
  std::optional<geo::GeoPoint> location_after;
  std::optional<double> location_change_km;
  std::optional<double> weeks_to_update;
  bool missing_history = false;  // data-quality flag
};

struct EpisodeConfig {
  // One sample-day per week is the historical cadence; a single missed week
  // must not split episodes.
  timeutil::UnixSeconds gap_tolerance = 2 * timeutil::kSecondsPerWeek;
  timeutil::UnixSeconds disconnect_threshold = 30 * timeutil::kSecondsPerDay;
};

/// Merges violating windows into contiguous episodes and classifies how each
/// one ended. A location-history change after the first violation that
/// precedes cessation resolves the episode as LOCATION_UPDATE; a probe that
/// stops responding for the disconnect threshold is DISCONNECTED; cessation
/// with continued responsiveness and no update is MEASUREMENT_CHANGE.
std::vector<ViolationEpisode> build_episodes(
    const std::vector<ProbeTimeline>& timelines,
    const std::map<registry::ProbeId, registry::ProbeRecord>& probes,
    const EpisodeConfig& config = {});

/// Great-circle distance between the reported pins before and after the
/// update; only defined for LOCATION_UPDATE episodes.
geo::DistanceKm location_change_distance(const ViolationEpisode& episode);

struct TimeBucket {
  timeutil::UnixSeconds bucket_start = 0;
  std::int64_t violating_probes = 0;
  std::int64_t responding_probes = 0;
  double violating_ratio = 0.0;
};

std::vector<TimeBucket> violators_over_time(const std::vector<ProbeTimeline>& timelines,
                                            timeutil::UnixSeconds bucket_seconds);

/// Empirical CDF over weeks_to_update of LOCATION_UPDATE episodes.
std::vector<std::pair<double, double>> weeks_to_update_cdf(
    const std::vector<ViolationEpisode>& episodes);

/// Builds per-probe timelines from the raw observations and a detection
/// report over the same observations.
std::vector<ProbeTimeline> timelines_from_report(
    const std::vector<ingest::LatencyObservation>& observations,
    const detector::DetectionReport& report);

}  // namespace soiverify::longitudinal

#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "soiverify/registry.hpp"
#include "soiverify/time_util.hpp"

namespace soiverify::ingest {

/// One successful ping sample.
struct Sample {
  std::string vp_id;
  registry::ProbeId probe_id = 0;
  timeutil::UnixSeconds timestamp = 0;
  double rtt_ms = 0.0;
};

/// Minimum RTT per <vantage point, probe, window>.
struct LatencyObservation {
  std::string vp_id;
  registry::ProbeId probe_id = 0;
  timeutil::UnixSeconds window_start = 0;
  double min_rtt_ms = 0.0;
  std::int64_t sample_count = 0;

  auto key() const { return std::tie(probe_id, vp_id, window_start); }
};

inline constexpr timeutil::UnixSeconds kCampaignWindowSeconds = 12 * 3600;
inline constexpr timeutil::UnixSeconds kHistoricalWindowSeconds = timeutil::kSecondsPerWeek;

struct AggregateResult {
  std::vector<LatencyObservation> observations;  // sorted by (probe, vp, window)
  std::int64_t rejected_samples = 0;             // non-positive RTT
};

/// Buckets samples into fixed windows aligned to the Unix epoch and keeps the
/// minimum RTT per <vp, probe, window>. Order-independent.
AggregateResult aggregate_min_rtt(const std::vector<Sample>& samples,
                                  timeutil::UnixSeconds window_seconds);

struct CampaignLoadResult {
  std::vector<Sample> samples;
  std::int64_t dropped_timeouts = 0;   // rtt "*"
  std::int64_t malformed_lines = 0;
};

/// Reads a ping campaign file: one `vp_id,probe_id,iso8601,rtt_ms|*` record
/// per line. Timeouts are dropped and tallied; a vp_id absent from the
/// registry is an error.
CampaignLoadResult load_ping_campaign(std::istream& in, const registry::VpRegistry& vps);

}  // namespace soiverify::ingest

#include "soiverify/ingest.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>

namespace soiverify::ingest {

AggregateResult aggregate_min_rtt(const std::vector<Sample>& samples,
                                  timeutil::UnixSeconds window_seconds) {
  if (window_seconds <= 0) {
    throw std::invalid_argument("window must be positive");
  }
  AggregateResult out;
  std::map<std::tuple<registry::ProbeId, std::string, timeutil::UnixSeconds>, LatencyObservation>
      acc;
  for (const Sample& s : samples) {
    if (s.rtt_ms <= 0.0) {
      ++out.rejected_samples;
      continue;
    }
    timeutil::UnixSeconds w = s.timestamp / window_seconds;
    if (s.timestamp % window_seconds < 0) --w;
    const timeutil::UnixSeconds window_start = w * window_seconds;
    auto [it, inserted] = acc.try_emplace({s.probe_id, s.vp_id, window_start},
                                          LatencyObservation{s.vp_id, s.probe_id, window_start,
                                                             s.rtt_ms, 1});
    if (!inserted) {
      it->second.min_rtt_ms = std::min(it->second.min_rtt_ms, s.rtt_ms);
      ++it->second.sample_count;
    }
  }
  out.observations.reserve(acc.size());
  for (auto& [key, obs] : acc) out.observations.push_back(std::move(obs));
  return out;
}

CampaignLoadResult load_ping_campaign(std::istream& in, const registry::VpRegistry& vps) {
  CampaignLoadResult out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string vp_id, probe_str, ts_str, rtt_str;
    if (!std::getline(ss, vp_id, ',') || !std::getline(ss, probe_str, ',') ||
        !std::getline(ss, ts_str, ',') || !std::getline(ss, rtt_str)) {
      ++out.malformed_lines;
      continue;
    }
    if (!vps.vps.count(vp_id)) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": unregistered vantage point '" + vp_id + "'");
    }
    if (rtt_str == "*") {
      ++out.dropped_timeouts;
      continue;
    }
    auto ts = timeutil::parse_iso8601(ts_str);
    if (!ts) {
      ++out.malformed_lines;
      continue;
    }
    try {
      const registry::ProbeId probe_id = std::stoll(probe_str);
      const double rtt = std::stod(rtt_str);
      out.samples.push_back({vp_id, probe_id, *ts, rtt});
    } catch (const std::exception&) {
      ++out.malformed_lines;
    }
  }
  return out;
}

}  // namespace soiverify::ingest

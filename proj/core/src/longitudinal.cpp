#include "soiverify/longitudinal.hpp"

#include <algorithm>
#include <set>

namespace soiverify::longitudinal {

const char* to_string(Resolution r) {
  switch (r) {
    case Resolution::LOCATION_UPDATE: return "LOCATION_UPDATE";
    case Resolution::DISCONNECTED: return "DISCONNECTED";
    case Resolution::MEASUREMENT_CHANGE: return "MEASUREMENT_CHANGE";
    case Resolution::ONGOING: return "ONGOING";
  }
  return "?";
}

namespace {

using timeutil::UnixSeconds;

/// First location-history entry strictly after `after` and at or before `by`.
const registry::LocationEntry* update_between(const registry::ProbeRecord& probe,
                                              UnixSeconds after, UnixSeconds by) {
  for (const auto& entry : probe.location_history) {
    if (entry.effective_from > after && entry.effective_from <= by) return &entry;
  }
  return nullptr;
}

}  // namespace

std::vector<ViolationEpisode> build_episodes(
    const std::vector<ProbeTimeline>& timelines,
    const std::map<registry::ProbeId, registry::ProbeRecord>& probes,
    const EpisodeConfig& config) {
  std::vector<ViolationEpisode> episodes;

  UnixSeconds end_of_data = 0;
  for (const auto& tl : timelines) {
    if (!tl.responding_windows.empty()) {
      end_of_data = std::max(end_of_data, tl.responding_windows.back());
    }
  }

  for (const auto& tl : timelines) {
    if (tl.violating_windows.empty()) continue;
    const registry::ProbeRecord* probe = nullptr;
    if (auto it = probes.find(tl.probe_id); it != probes.end()) probe = &it->second;

    // Split the sorted violating windows into gap-tolerant runs.
    std::vector<std::pair<UnixSeconds, UnixSeconds>> runs;
    UnixSeconds run_start = tl.violating_windows.front();
    UnixSeconds run_last = run_start;
    for (std::size_t i = 1; i < tl.violating_windows.size(); ++i) {
      const UnixSeconds w = tl.violating_windows[i];
      if (w - run_last > config.gap_tolerance) {
        runs.emplace_back(run_start, run_last);
        run_start = w;
      }
      run_last = w;
    }
    runs.emplace_back(run_start, run_last);

    for (const auto& [first, last] : runs) {
      ViolationEpisode ep;
      ep.probe_id = tl.probe_id;
      ep.first_violation = first;
      ep.last_violation = last;

      if (!probe || probe->location_history.empty()) {
        ep.resolution = Resolution::ONGOING;
        ep.missing_history = true;
        episodes.push_back(std::move(ep));
        continue;
      }
      ep.location_before = registry::location_at(*probe, first);

      const bool still_violating_at_end = end_of_data - last <= config.gap_tolerance;
      const registry::LocationEntry* update =
          update_between(*probe, first, last + config.gap_tolerance);
      const bool responds_after = std::any_of(
          tl.responding_windows.begin(), tl.responding_windows.end(), [&](UnixSeconds w) {
            return w > last && w <= last + config.disconnect_threshold;
          });

      if (update && !still_violating_at_end) {
        ep.resolution = Resolution::LOCATION_UPDATE;
        ep.location_after = update->location;
        ep.location_change_km = geo::haversine(*ep.location_before, update->location).value;
        ep.weeks_to_update = static_cast<double>(update->effective_from - first) /
                             static_cast<double>(timeutil::kSecondsPerWeek);
      } else if (still_violating_at_end) {
        ep.resolution = Resolution::ONGOING;
      } else if (!responds_after) {
        ep.resolution = Resolution::DISCONNECTED;
      } else {
        ep.resolution = Resolution::MEASUREMENT_CHANGE;
      }
      episodes.push_back(std::move(ep));
    }
  }

  std::sort(episodes.begin(), episodes.end(), [](const auto& a, const auto& b) {
    return std::tie(a.probe_id, a.first_violation) < std::tie(b.probe_id, b.first_violation);
  });
  return episodes;
}

geo::DistanceKm location_change_distance(const ViolationEpisode& episode) {
  if (episode.resolution != Resolution::LOCATION_UPDATE || !episode.location_before ||
      !episode.location_after) {
    throw std::invalid_argument("location_change_distance requires a LOCATION_UPDATE episode");
  }
  return geo::haversine(*episode.location_before, *episode.location_after);
}

std::vector<TimeBucket> violators_over_time(const std::vector<ProbeTimeline>& timelines,
                                            timeutil::UnixSeconds bucket_seconds) {
  if (bucket_seconds <= 0) throw std::invalid_argument("bucket duration must be positive");
  std::map<timeutil::UnixSeconds, std::pair<std::set<registry::ProbeId>, std::set<registry::ProbeId>>>
      buckets;  // bucket_start -> (violating, responding)
  auto bucket_of = [bucket_seconds](timeutil::UnixSeconds t) {
    timeutil::UnixSeconds b = t / bucket_seconds;
    if (t % bucket_seconds < 0) --b;
    return b * bucket_seconds;
  };
  for (const auto& tl : timelines) {
    for (timeutil::UnixSeconds w : tl.responding_windows) {
      buckets[bucket_of(w)].second.insert(tl.probe_id);
    }
    for (timeutil::UnixSeconds w : tl.violating_windows) {
      buckets[bucket_of(w)].first.insert(tl.probe_id);
    }
  }
  std::vector<TimeBucket> out;
  out.reserve(buckets.size());
  for (const auto& [start, sets] : buckets) {
    TimeBucket b;
    b.bucket_start = start;
    b.violating_probes = static_cast<std::int64_t>(sets.first.size());
    b.responding_probes = static_cast<std::int64_t>(sets.second.size());
    b.violating_ratio = b.responding_probes == 0
                            ? 0.0
                            : static_cast<double>(b.violating_probes) /
                                  static_cast<double>(b.responding_probes);
    out.push_back(b);
  }
  return out;
}

std::vector<std::pair<double, double>> weeks_to_update_cdf(
    const std::vector<ViolationEpisode>& episodes) {
  std::vector<double> weeks;
  for (const auto& ep : episodes) {
    if (ep.resolution == Resolution::LOCATION_UPDATE && ep.weeks_to_update) {
      weeks.push_back(*ep.weeks_to_update);
    }
  }
  std::sort(weeks.begin(), weeks.end());
  std::vector<std::pair<double, double>> out;
  const double n = static_cast<double>(weeks.size());
  for (std::size_t i = 0; i < weeks.size(); ++i) {
    out.emplace_back(weeks[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

std::vector<ProbeTimeline> timelines_from_report(
    const std::vector<ingest::LatencyObservation>& observations,
    const detector::DetectionReport& report) {
  std::map<registry::ProbeId, std::pair<std::set<timeutil::UnixSeconds>,
                                        std::set<timeutil::UnixSeconds>>>
      acc;  // probe -> (responding, violating)
  for (const auto& obs : observations) {
    acc[obs.probe_id].first.insert(obs.window_start);
  }
  for (const auto& rec : report.records) {
    acc[rec.probe_id].second.insert(rec.window_start);
  }
  std::vector<ProbeTimeline> out;
  out.reserve(acc.size());
  for (const auto& [id, sets] : acc) {
    ProbeTimeline tl;
    tl.probe_id = id;
    tl.responding_windows.assign(sets.first.begin(), sets.first.end());
    tl.violating_windows.assign(sets.second.begin(), sets.second.end());
    out.push_back(std::move(tl));
  }
  return out;
}

}  // namespace soiverify::longitudinal

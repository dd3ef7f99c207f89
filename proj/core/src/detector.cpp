#include "soiverify/detector.hpp"

#include <algorithm>
#include <sstream>

namespace soiverify::detector {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a_double(std::uint64_t h, double v) { return fnv1a(h, &v, sizeof(v)); }

}  // namespace

std::uint64_t DetectionConfig::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a_double(h, guard_ms);
  h = fnv1a_double(h, probe_allowance_km());
  h = fnv1a_double(h, geo::kEarthRadiusKm);
  h = fnv1a_double(h, free_space_speed_km_per_s);
  h = fnv1a_double(h, fiber_speed_km_per_s);
  return h;
}

DetectionReport detect(const std::vector<ingest::LatencyObservation>& observations,
                       const std::map<registry::ProbeId, registry::ProbeRecord>& probes,
                       const registry::VpRegistry& vps, const DetectionConfig& config) {
  DetectionReport report;
  report.config_fingerprint = config.fingerprint();

  for (const auto& obs : observations) {
    auto probe_it = probes.find(obs.probe_id);
    if (probe_it == probes.end()) {
      ++report.skipped_unknown_probe;
      continue;
    }
    auto vp_it = vps.vps.find(obs.vp_id);
    if (vp_it == vps.vps.end()) {
      ++report.skipped_unknown_vp;
      continue;
    }
    const registry::ProbeRecord& probe = probe_it->second;
    const registry::VantagePoint& vp = vp_it->second;
    const geo::GeoPoint* reported;
    try {
      reported = &registry::location_at(probe, obs.window_start);
    } catch (const std::out_of_range&) {
      ++report.skipped_no_location;
      continue;
    }
    ++report.scanned_pairs;

    const geo::DistanceKm d_theory = geo::haversine(vp.location, *reported);
    const soi::Medium medium = soi::classify_medium(probe.asns());
    const double speed = config.speed_km_per_ms(medium);
    const soi::RttBound bound = soi::min_rtt_bound_at_speed(
        d_theory, vp.error_radius_km + config.probe_allowance_km(), speed);
    if (soi::is_violation(obs.min_rtt_ms, bound, config.guard_ms)) {
      soi::ViolationRecord rec;
      rec.probe_id = obs.probe_id;
      rec.vp_id = obs.vp_id;
      rec.window_start = obs.window_start;
      rec.measured_rtt_ms = obs.min_rtt_ms;
      rec.bound_rtt_ms = bound.bound_ms;
      rec.margin_ms = bound.bound_ms - obs.min_rtt_ms;
      rec.min_distance_error_km =
          soi::distance_error_at_speed(obs.min_rtt_ms, d_theory, speed).value;
      report.records.push_back(std::move(rec));
      report.violating_probes.insert(obs.probe_id);
    }
  }

  std::sort(report.records.begin(), report.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.probe_id, a.vp_id, a.window_start) <
           std::tie(b.probe_id, b.vp_id, b.window_start);
  });
  report.country_aggregates = aggregate_by_country(report, probes, CountryOrder::BY_COUNT);
  return report;
}

std::vector<CountryAggregate> aggregate_by_country(
    const DetectionReport& report,
    const std::map<registry::ProbeId, registry::ProbeRecord>& probes, CountryOrder order,
    std::int64_t min_probes) {
  std::map<std::string, CountryAggregate> by_country;
  for (const auto& [id, probe] : probes) {
    auto& agg = by_country[probe.country_code];
    agg.country_code = probe.country_code;
    ++agg.probe_count;
    if (report.violating_probes.count(id)) ++agg.violator_count;
  }
  std::vector<CountryAggregate> out;
  for (auto& [code, agg] : by_country) {
    if (agg.probe_count < min_probes || agg.violator_count == 0) continue;
    agg.violator_pct = 100.0 * static_cast<double>(agg.violator_count) /
                       static_cast<double>(agg.probe_count);
    out.push_back(agg);
  }
  std::sort(out.begin(), out.end(), [order](const CountryAggregate& a, const CountryAggregate& b) {
    if (order == CountryOrder::BY_COUNT) {
      if (a.violator_count != b.violator_count) return a.violator_count > b.violator_count;
    } else {
      if (a.violator_pct != b.violator_pct) return a.violator_pct > b.violator_pct;
    }
    return a.country_code < b.country_code;
  });
  return out;
}

std::vector<std::pair<double, double>> error_cdf(const DetectionReport& report) {
  std::vector<double> errors;
  errors.reserve(report.records.size());
  for (const auto& rec : report.records) errors.push_back(rec.min_distance_error_km);
  std::sort(errors.begin(), errors.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(errors.size());
  const double n = static_cast<double>(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    out.emplace_back(errors[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

std::vector<std::pair<registry::ProbeId, double>> per_probe_max_error(
    const DetectionReport& report) {
  std::map<registry::ProbeId, double> max_err;
  for (const auto& rec : report.records) {
    auto [it, inserted] = max_err.try_emplace(rec.probe_id, rec.min_distance_error_km);
    if (!inserted) it->second = std::max(it->second, rec.min_distance_error_km);
  }
  return {max_err.begin(), max_err.end()};
}

CentroidTable load_centroids(std::istream& in) {
  CentroidTable out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string code, lat_str, lon_str;
    if (!std::getline(ss, code, ',') || !std::getline(ss, lat_str, ',') ||
        !std::getline(ss, lon_str)) {
      continue;
    }
    out.emplace(code, geo::GeoPoint(std::stod(lat_str), std::stod(lon_str)));
  }
  return out;
}

bool centroid_distance_check(const registry::ProbeRecord& probe, const CentroidTable& centroids,
                             timeutil::UnixSeconds at, double threshold_km) {
  const geo::GeoPoint& centroid = centroids.at(probe.country_code);
  const geo::GeoPoint& reported = registry::location_at(probe, at);
  return geo::haversine(reported, centroid).value > threshold_km;
}

}  // namespace soiverify::detector

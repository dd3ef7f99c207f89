#include "soiverify/simulator.hpp"

#include <cmath>

namespace soiverify::sim {

namespace {

constexpr double kPi = 3.14159265358979323846;

// splitmix64; chained to derive a counter-based stream per (seed, vp, probe).
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double u01(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t stream) {
  const std::uint64_t h = mix(mix(mix(mix(seed) ^ a) ^ b) ^ stream);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

geo::GeoPoint uniform_sphere_point(double u_lat, double u_lon) {
  const double lat = std::asin(2.0 * u_lat - 1.0) * 180.0 / kPi;
  const double lon = u_lon * 360.0 - 180.0;
  return {std::clamp(lat, -90.0, 90.0), std::clamp(lon, -180.0, 180.0)};
}

/// Destination point a given great-circle distance along a bearing.
geo::GeoPoint displace(const geo::GeoPoint& origin, double distance_km, double bearing_rad) {
  const double delta = distance_km / geo::kEarthRadiusKm;
  const double lat1 = origin.lat_deg() * kPi / 180.0;
  const double lon1 = origin.lon_deg() * kPi / 180.0;
  const double lat2 = std::asin(std::sin(lat1) * std::cos(delta) +
                                std::cos(lat1) * std::sin(delta) * std::cos(bearing_rad));
  const double lon2 =
      lon1 + std::atan2(std::sin(bearing_rad) * std::sin(delta) * std::cos(lat1),
                        std::cos(delta) - std::sin(lat1) * std::sin(lat2));
  double lon_deg = lon2 * 180.0 / kPi;
  while (lon_deg > 180.0) lon_deg -= 360.0;
  while (lon_deg < -180.0) lon_deg += 360.0;
  return {std::clamp(lat2 * 180.0 / kPi, -90.0, 90.0), lon_deg};
}

}  // namespace

double Dist::sample(double u) const {
  switch (kind) {
    case Kind::FIXED: return a;
    case Kind::UNIFORM: return a + u * (b - a);
  }
  return a;
}

void Dist::validate() const {
  if (a < 0.0 || b < a) {
    throw std::invalid_argument("distribution support must be non-negative and ordered");
  }
}

double Mixture::sample(double u_pick, double u_value) const {
  double total = 0.0;
  for (const auto& [w, d] : components) total += w;
  double acc = 0.0;
  for (const auto& [w, d] : components) {
    acc += w / total;
    if (u_pick < acc) return d.sample(u_value);
  }
  return components.back().second.sample(u_value);
}

void Mixture::validate() const {
  if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
  for (const auto& [w, d] : components) {
    if (w <= 0.0) throw std::invalid_argument("mixture weights must be positive");
    d.validate();
  }
}

void SimScenario::validate() const {
  if (n_probes < 0 || n_vps < 0) throw std::invalid_argument("negative counts");
  if (misreport_fraction < 0.0 || misreport_fraction > 1.0) {
    throw std::invalid_argument("misreport_fraction outside [0,1]");
  }
  if (free_space_fraction < 0.0 || free_space_fraction > 1.0) {
    throw std::invalid_argument("free_space_fraction outside [0,1]");
  }
  displacement_km.validate();
  inflation_factor.validate();
  jitter_ms.validate();
}

SimWorld generate(const SimScenario& sc) {
  sc.validate();
  SimWorld world;
  if (sc.n_probes == 0) return world;

  constexpr timeutil::UnixSeconds kWindowStart = 1'714'521'600;  // 2024-05-01

  // Stream ids per random purpose.
  enum : std::uint64_t {
    kVpLat = 1, kVpLon, kProbeLat, kProbeLon, kMisreport, kDispPick, kDispValue,
    kBearing, kMedium, kInflation, kJitter
  };

  std::map<registry::ProbeId, geo::GeoPoint> true_locations;

  for (std::int64_t v = 0; v < sc.n_vps; ++v) {
    registry::VantagePoint vp{"sim-vp-" + std::to_string(v),
                              uniform_sphere_point(u01(sc.seed, v, 0, kVpLat),
                                                   u01(sc.seed, v, 0, kVpLon)),
                              0.0, registry::VpKind::EXACT};
    world.vps.vps.emplace(vp.vp_id, std::move(vp));
  }

  for (std::int64_t p = 0; p < sc.n_probes; ++p) {
    const registry::ProbeId id = p + 1;
    const geo::GeoPoint true_loc =
        uniform_sphere_point(u01(sc.seed, 0, p, kProbeLat), u01(sc.seed, 0, p, kProbeLon));
    true_locations.emplace(id, true_loc);

    geo::GeoPoint reported = true_loc;
    double displacement = 0.0;
    if (u01(sc.seed, 0, p, kMisreport) < sc.misreport_fraction) {
      displacement = sc.displacement_km.sample(u01(sc.seed, 0, p, kDispPick),
                                               u01(sc.seed, 0, p, kDispValue));
      if (displacement > 0.0) {
        reported = displace(true_loc, displacement, u01(sc.seed, 0, p, kBearing) * 2.0 * kPi);
        world.truth.insert(id);
      }
    }
    world.displacement_km.emplace(id, displacement);

    registry::ProbeRecord rec;
    rec.probe_id = id;
    rec.country_code = "ZZ";
    if (u01(sc.seed, 0, p, kMedium) < sc.free_space_fraction) {
      rec.asn_v4 = soi::kStarlinkAsn;
    }
    rec.location_history.push_back({0, reported});
    world.probes.emplace(id, std::move(rec));
  }

  for (const auto& [vp_id, vp] : world.vps.vps) {
    const std::uint64_t v = std::stoull(vp_id.substr(7));
    for (const auto& [probe_id, probe] : world.probes) {
      const std::uint64_t p = static_cast<std::uint64_t>(probe_id - 1);
      const soi::Medium medium = soi::classify_medium(probe.asns());
      const double true_dist = geo::haversine(vp.location, true_locations.at(probe_id)).value;
      const double physical_ms =
          soi::min_rtt_bound(geo::DistanceKm{true_dist}, 0.0, medium).bound_ms;
      const double inflation = sc.inflation_factor.sample(u01(sc.seed, v, p, kInflation));
      const double jitter = sc.jitter_ms.sample(u01(sc.seed, v, p, kJitter));
      double rtt = sc.allow_subphysical ? physical_ms * std::max(0.0, 1.0 - inflation)
                                        : physical_ms * (1.0 + inflation) + jitter;
      if (rtt <= 0.0) rtt = 0.001;  // keep samples well-formed
      world.observations.push_back({vp_id, probe_id, kWindowStart, rtt, 1});
    }
  }
  std::sort(world.observations.begin(), world.observations.end(),
            [](const auto& a, const auto& b) { return a.key() < b.key(); });
  return world;
}

SimResult evaluate(const SimScenario& scenario, const detector::DetectionConfig& config,
                   const std::vector<double>& bucket_edges_km) {
  const SimWorld world = generate(scenario);
  const detector::DetectionReport report =
      detector::detect(world.observations, world.probes, world.vps, config);

  SimResult result;
  result.truth = world.truth;
  result.flagged = report.violating_probes;

  std::int64_t true_positives = 0;
  for (registry::ProbeId id : result.flagged) {
    if (result.truth.count(id)) ++true_positives;
  }
  result.precision = result.flagged.empty()
                         ? 1.0
                         : static_cast<double>(true_positives) /
                               static_cast<double>(result.flagged.size());
  result.recall = result.truth.empty() ? 1.0
                                       : static_cast<double>(true_positives) /
                                             static_cast<double>(result.truth.size());

  for (std::size_t i = 0; i + 1 < bucket_edges_km.size(); ++i) {
    RecallBucket bucket;
    bucket.lo_km = bucket_edges_km[i];
    bucket.hi_km = bucket_edges_km[i + 1];
    for (const auto& [id, disp] : world.displacement_km) {
      if (!result.truth.count(id)) continue;
      if (disp >= bucket.lo_km && disp < bucket.hi_km) {
        ++bucket.truth_count;
        if (result.flagged.count(id)) ++bucket.flagged_count;
      }
    }
    bucket.recall = bucket.truth_count == 0
                        ? 0.0
                        : static_cast<double>(bucket.flagged_count) /
                              static_cast<double>(bucket.truth_count);
    result.recall_by_displacement.push_back(bucket);
  }
  return result;
}

}  // namespace soiverify::sim

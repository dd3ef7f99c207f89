#include "soiverify/baselines.hpp"

#include <algorithm>
#include <sstream>

namespace soiverify::baselines {

const char* to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::GHARAIBEH_DEFAULT_COORD: return "GHARAIBEH_DEFAULT_COORD";
    case BaselineMethod::GHARAIBEH_SHARED_ROUTER: return "GHARAIBEH_SHARED_ROUTER";
    case BaselineMethod::DARWICH_PRUNED: return "DARWICH_PRUNED";
  }
  return "?";
}

TracerouteLoadResult load_traceroutes(std::istream& in) {
  TracerouteLoadResult out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string probe_str, ts_str, hops_str;
    if (!std::getline(ss, probe_str, ',') || !std::getline(ss, ts_str, ',')) {
      ++out.malformed_lines;
      continue;
    }
    std::getline(ss, hops_str);  // may legitimately be empty
    auto ts = timeutil::parse_iso8601(ts_str);
    if (!ts) {
      ++out.malformed_lines;
      continue;
    }
    TracerouteRecord rec;
    try {
      rec.probe_id = std::stoll(probe_str);
    } catch (const std::exception&) {
      ++out.malformed_lines;
      continue;
    }
    rec.timestamp = *ts;
    std::istringstream hops(hops_str);
    std::string hop;
    while (hops >> hop) rec.hop_ips.push_back(hop);
    if (rec.hop_ips.empty()) {
      ++out.skipped_empty;
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

std::vector<BaselineFlag> gharaibeh_flags(
    const std::map<registry::ProbeId, registry::ProbeRecord>& probes,
    const std::vector<TracerouteRecord>& traceroutes, const detector::CentroidTable& centroids,
    timeutil::UnixSeconds at, const GharaibehConfig& config) {
  std::vector<BaselineFlag> flags;

  auto reported = [&](registry::ProbeId id) -> const geo::GeoPoint* {
    auto it = probes.find(id);
    if (it == probes.end()) return nullptr;
    try {
      return &registry::location_at(it->second, at);
    } catch (const std::out_of_range&) {
      return nullptr;
    }
  };

  // (a) default country coordinates
  for (const auto& [id, probe] : probes) {
    const geo::GeoPoint* loc = reported(id);
    if (!loc) continue;
    auto cen = centroids.find(probe.country_code);
    if (cen == centroids.end()) continue;
    const double d = geo::haversine(*loc, cen->second).value;
    const bool match = config.centroid_match_km == 0.0 ? (*loc == cen->second)
                                                       : d <= config.centroid_match_km;
    if (match) {
      flags.push_back({id, BaselineMethod::GHARAIBEH_DEFAULT_COORD,
                       DefaultCoordEvidence{probe.country_code, d}});
    }
  }

  // (b) shared-router groups reporting far-apart pins
  std::map<std::string, std::set<registry::ProbeId>> router_groups;
  for (const auto& tr : traceroutes) {
    if (tr.hop_ips.empty()) continue;
    if (config.first_hop_only) {
      router_groups[tr.hop_ips.front()].insert(tr.probe_id);
    } else {
      for (const auto& hop : tr.hop_ips) router_groups[hop].insert(tr.probe_id);
    }
  }
  std::set<std::pair<registry::ProbeId, std::string>> already;
  for (const auto& [router, members] : router_groups) {
    if (members.size() < 2) continue;
    std::vector<std::pair<registry::ProbeId, const geo::GeoPoint*>> located;
    for (registry::ProbeId id : members) {
      if (const geo::GeoPoint* loc = reported(id)) located.emplace_back(id, loc);
    }
    for (std::size_t i = 0; i < located.size(); ++i) {
      for (std::size_t j = i + 1; j < located.size(); ++j) {
        const double d = geo::haversine(*located[i].second, *located[j].second).value;
        if (d <= config.router_distance_km) continue;
        for (auto [id, peer] : {std::pair{located[i].first, located[j].first},
                                std::pair{located[j].first, located[i].first}}) {
          if (already.insert({id, router}).second) {
            flags.push_back({id, BaselineMethod::GHARAIBEH_SHARED_ROUTER,
                             SharedRouterEvidence{router, peer, d}});
          }
        }
      }
    }
  }

  std::stable_sort(flags.begin(), flags.end(),
                   [](const auto& a, const auto& b) { return a.probe_id < b.probe_id; });
  return flags;
}

void AnchorMesh::add_pair(AnchorId a, AnchorId b, double rtt_ms) {
  if (a == b) throw std::invalid_argument("anchor pair must be distinct");
  if (rtt_ms <= 0.0) throw std::invalid_argument("pair RTT must be positive");
  auto key = std::minmax(a, b);
  auto [it, inserted] = min_rtt_ms.try_emplace({key.first, key.second}, rtt_ms);
  if (!inserted) it->second = std::min(it->second, rtt_ms);
}

std::optional<double> AnchorMesh::rtt(AnchorId a, AnchorId b) const {
  auto key = std::minmax(a, b);
  auto it = min_rtt_ms.find({key.first, key.second});
  if (it == min_rtt_ms.end()) return std::nullopt;
  return it->second;
}

namespace {

bool pair_violates(const geo::GeoPoint& a, const geo::GeoPoint& b, double rtt_ms,
                   double guard_ms) {
  const auto bound = soi::min_rtt_bound(geo::haversine(a, b), 0.0, soi::Medium::FIBER);
  return soi::is_violation(rtt_ms, bound, guard_ms);
}

}  // namespace

PruneResult darwich_prune(const AnchorMesh& mesh, double guard_ms) {
  PruneResult out;
  for (const auto& [id, loc] : mesh.locations) out.validated.insert(id);

  for (;;) {
    std::map<AnchorId, std::int64_t> violation_counts;
    for (const auto& [key, rtt] : mesh.min_rtt_ms) {
      const auto [a, b] = key;
      if (!out.validated.count(a) || !out.validated.count(b)) continue;
      if (pair_violates(mesh.locations.at(a), mesh.locations.at(b), rtt, guard_ms)) {
        ++violation_counts[a];
        ++violation_counts[b];
      }
    }
    if (violation_counts.empty()) break;
    // max count, ties to the smallest anchor id (map iteration is ascending)
    AnchorId worst = 0;
    std::int64_t worst_count = -1;
    for (const auto& [id, count] : violation_counts) {
      if (count > worst_count) {
        worst = id;
        worst_count = count;
      }
    }
    out.validated.erase(worst);
    out.pruned.push_back({worst, BaselineMethod::DARWICH_PRUNED, PrunedEvidence{worst_count}});
  }
  return out;
}

std::vector<BaselineFlag> darwich_probe_stage(
    const std::map<registry::ProbeId, std::map<AnchorId, double>>& probe_rtts,
    const std::map<registry::ProbeId, geo::GeoPoint>& probe_locations,
    const std::map<AnchorId, geo::GeoPoint>& anchor_locations,
    const std::set<AnchorId>& validated, double guard_ms) {
  std::vector<BaselineFlag> flags;
  for (const auto& [probe_id, rtts] : probe_rtts) {
    auto loc_it = probe_locations.find(probe_id);
    if (loc_it == probe_locations.end()) continue;
    std::int64_t violating_pairs = 0;
    for (const auto& [anchor, rtt] : rtts) {
      if (!validated.count(anchor)) continue;
      if (pair_violates(loc_it->second, anchor_locations.at(anchor), rtt, guard_ms)) {
        ++violating_pairs;
      }
    }
    if (violating_pairs > 0) {
      flags.push_back({probe_id, BaselineMethod::DARWICH_PRUNED,
                       PrunedEvidence{violating_pairs}});
    }
  }
  return flags;
}

MethodComparison compare_methods(const std::set<registry::ProbeId>& primary_flagged,
                                 const std::set<registry::ProbeId>& baseline_flagged,
                                 std::int64_t n_vps, std::int64_t n_probes,
                                 std::int64_t n_anchors) {
  MethodComparison out;
  out.primary_flags = static_cast<std::int64_t>(primary_flagged.size());
  out.baseline_flags = static_cast<std::int64_t>(baseline_flagged.size());
  for (registry::ProbeId id : primary_flagged) {
    if (baseline_flagged.count(id)) {
      ++out.both;
    } else {
      out.only_primary.insert(id);
    }
  }
  for (registry::ProbeId id : baseline_flagged) {
    if (!primary_flagged.count(id)) out.only_baseline.insert(id);
  }
  out.primary_pair_cost = n_vps * n_probes;
  out.darwich_pair_cost = n_anchors * n_anchors + n_anchors * n_probes;
  out.cost_ratio = out.primary_pair_cost == 0
                       ? 0.0
                       : static_cast<double>(out.darwich_pair_cost) /
                             static_cast<double>(out.primary_pair_cost);
  return out;
}

}  // namespace soiverify::baselines

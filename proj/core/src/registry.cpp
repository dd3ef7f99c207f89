#include "soiverify/registry.hpp"

#include <algorithm>

#include "json.hpp"

namespace soiverify::registry {

using nlohmann::json;

const geo::GeoPoint& location_at(const ProbeRecord& probe, timeutil::UnixSeconds t) {
  const auto& hist = probe.location_history;
  if (hist.empty() || t < hist.front().effective_from) {
    throw std::out_of_range("probe " + std::to_string(probe.probe_id) +
                            " has no reported location at " + timeutil::format_iso8601(t));
  }
  auto it = std::upper_bound(hist.begin(), hist.end(), t,
                             [](timeutil::UnixSeconds v, const LocationEntry& e) {
                               return v < e.effective_from;
                             });
  return std::prev(it)->location;
}

namespace {

std::optional<ProbeStatus> parse_status(const std::string& s) {
  if (s == "connected") return ProbeStatus::CONNECTED;
  if (s == "disconnected") return ProbeStatus::DISCONNECTED;
  if (s == "abandoned") return ProbeStatus::ABANDONED;
  return std::nullopt;
}

struct Snapshot {
  ProbeId id;
  timeutil::UnixSeconds date;
  std::optional<geo::GeoPoint> location;
  std::optional<soi::Asn> asn_v4, asn_v6;
  std::string country_code;
  std::optional<std::string> admin1;
  ProbeStatus status;
  bool is_anchor;
};

Snapshot parse_snapshot(const json& doc) {
  Snapshot s;
  s.id = doc.at("id").get<ProbeId>();
  auto date = timeutil::parse_iso8601(doc.at("snapshot_date").get<std::string>());
  if (!date) throw std::invalid_argument("bad snapshot_date");
  s.date = *date;
  if (doc.contains("latitude") && doc.contains("longitude") && !doc["latitude"].is_null() &&
      !doc["longitude"].is_null()) {
    s.location = geo::GeoPoint(doc["latitude"].get<double>(), doc["longitude"].get<double>());
  }
  if (doc.contains("asn_v4") && !doc["asn_v4"].is_null()) s.asn_v4 = doc["asn_v4"].get<soi::Asn>();
  if (doc.contains("asn_v6") && !doc["asn_v6"].is_null()) s.asn_v6 = doc["asn_v6"].get<soi::Asn>();
  s.country_code = doc.value("country_code", "");
  if (doc.contains("admin1") && !doc["admin1"].is_null())
    s.admin1 = doc["admin1"].get<std::string>();
  auto status = parse_status(doc.value("status", "connected"));
  if (!status) throw std::invalid_argument("unknown status");
  s.status = *status;
  s.is_anchor = doc.value("is_anchor", false);
  return s;
}

}  // namespace

ProbeArchive load_probe_archive(std::istream& in) {
  ProbeArchive out;
  std::map<ProbeId, std::vector<Snapshot>> snaps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      Snapshot s = parse_snapshot(json::parse(line));
      snaps[s.id].push_back(std::move(s));
    } catch (const std::exception& e) {
      out.errors.push_back({line_no, e.what()});
    }
  }

  for (auto& [id, list] : snaps) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Snapshot& a, const Snapshot& b) { return a.date < b.date; });
    ProbeRecord rec;
    rec.probe_id = id;
    // metadata from the most recent snapshot
    const Snapshot& last = list.back();
    rec.asn_v4 = last.asn_v4;
    rec.asn_v6 = last.asn_v6;
    rec.country_code = last.country_code;
    rec.admin1 = last.admin1;
    rec.status = last.status;
    rec.is_anchor = last.is_anchor;
    for (const Snapshot& s : list) {
      if (!s.location) continue;
      if (!rec.location_history.empty() &&
          rec.location_history.back().location == *s.location) {
        continue;  // collapse consecutive identical coordinates
      }
      if (!rec.location_history.empty() &&
          rec.location_history.back().effective_from == s.date) {
        rec.location_history.back().location = *s.location;
        continue;
      }
      rec.location_history.push_back({s.date, *s.location});
    }
    out.probes.emplace(id, std::move(rec));
  }
  return out;
}

std::vector<VantagePoint> builtin_vp_registry(double city_radius_km) {
  const auto city = [&](const char* id, double lat, double lon) {
    return VantagePoint{id, geo::GeoPoint(lat, lon), city_radius_km, VpKind::CITY_CENTER};
  };
  return {
      city("ripe-fremont", 37.5485, -121.9886),
      city("ripe-newark", 40.7357, -74.1724),
      city("ripe-singapore", 1.3521, 103.8198),
      city("ripe-amsterdam-1", 52.3676, 4.9041),
      city("ripe-amsterdam-2", 52.3676, 4.9041),
      city("ripe-nuremberg-1", 49.4521, 11.0767),
      city("ripe-nuremberg-2", 49.4521, 11.0767),
  };
}

VpRegistry builtin_only_registry(double city_radius_km) {
  VpRegistry reg;
  for (auto& vp : builtin_vp_registry(city_radius_km)) {
    reg.vps.emplace(vp.vp_id, std::move(vp));
  }
  return reg;
}

VpRegistry load_vp_registry(std::istream& user_vps, double city_radius_km) {
  VpRegistry reg = builtin_only_registry(city_radius_km);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(user_vps, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json doc = json::parse(line);
      VantagePoint vp{doc.at("vp_id").get<std::string>(),
                      geo::GeoPoint(doc.at("latitude").get<double>(),
                                    doc.at("longitude").get<double>()),
                      doc.value("error_radius_km", 0.0), VpKind::EXACT};
      const std::string kind = doc.value("kind", "EXACT");
      if (kind == "CITY_CENTER") {
        vp.kind = VpKind::CITY_CENTER;
      } else if (kind != "EXACT") {
        throw std::invalid_argument("unknown kind: " + kind);
      }
      if (vp.kind == VpKind::EXACT && vp.error_radius_km != 0.0) {
        throw std::invalid_argument("EXACT vantage point must have zero error radius");
      }
      if (vp.error_radius_km < 0.0) {
        throw std::invalid_argument("negative error radius");
      }
      reg.vps.insert_or_assign(vp.vp_id, std::move(vp));
    } catch (const std::exception& e) {
      reg.errors.push_back({line_no, e.what()});
    }
  }
  return reg;
}

}  // namespace soiverify::registry

#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "soiverify/geo.hpp"
#include "soiverify/soi.hpp"
#include "soiverify/time_util.hpp"

namespace soiverify::registry {

using ProbeId = std::int64_t;

enum class ProbeStatus { CONNECTED, DISCONNECTED, ABANDONED };

struct LocationEntry {
  timeutil::UnixSeconds effective_from;
  geo::GeoPoint location;
};

/// Operator-reported probe metadata with its timestamped location history.
struct ProbeRecord {
  ProbeId probe_id = 0;
  std::optional<soi::Asn> asn_v4;
  std::optional<soi::Asn> asn_v6;
  std::string country_code;
  std::optional<std::string> admin1;
  ProbeStatus status = ProbeStatus::CONNECTED;
  bool is_anchor = false;
  std::vector<LocationEntry> location_history;  // strictly increasing effective_from

  std::set<soi::Asn> asns() const {
    std::set<soi::Asn> out;
    if (asn_v4) out.insert(*asn_v4);
    if (asn_v6) out.insert(*asn_v6);
    return out;
  }
};

/// Reported location at time t: last history entry with effective_from <= t.
/// Throws std::out_of_range if the history is empty or t precedes it.
const geo::GeoPoint& location_at(const ProbeRecord& probe, timeutil::UnixSeconds t);

enum class VpKind { EXACT, CITY_CENTER };

/// A measurement source with a trusted location. EXACT implies zero error radius.
struct VantagePoint {
  std::string vp_id;
  geo::GeoPoint location;
  double error_radius_km = 0.0;
  VpKind kind = VpKind::EXACT;
};

struct LoadError {
  std::size_t line_no = 0;
  std::string message;
};

struct ProbeArchive {
  std::map<ProbeId, ProbeRecord> probes;
  std::vector<LoadError> errors;
};

/// Loads newline-delimited probe snapshot documents, merging snapshots of the
/// same probe into a location history and collapsing consecutive identical
/// coordinates. Malformed documents are reported with line context and
/// skipped; the loader continues.
ProbeArchive load_probe_archive(std::istream& in);

struct VpRegistry {
  std::map<std::string, VantagePoint> vps;
  std::vector<LoadError> errors;
};

inline constexpr double kDefaultCityRadiusKm = 50.0;

/// The seven RIPE-operated central servers as CITY_CENTER vantage points.
std::vector<VantagePoint> builtin_vp_registry(double city_radius_km = kDefaultCityRadiusKm);

/// Loads newline-delimited {vp_id, latitude, longitude, error_radius_km, kind}
/// records and merges them with the built-in set.
VpRegistry load_vp_registry(std::istream& user_vps,
                            double city_radius_km = kDefaultCityRadiusKm);
VpRegistry builtin_only_registry(double city_radius_km = kDefaultCityRadiusKm);

}  // namespace soiverify::registry

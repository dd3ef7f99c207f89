#pragma once

#include <istream>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "soiverify/detector.hpp"
#include "soiverify/registry.hpp"

namespace soiverify::baselines {

struct TracerouteRecord {
  registry::ProbeId probe_id = 0;
  timeutil::UnixSeconds timestamp = 0;
  std::vector<std::string> hop_ips;
};

struct TracerouteLoadResult {
  std::vector<TracerouteRecord> records;
  std::int64_t skipped_empty = 0;
  std::int64_t malformed_lines = 0;
};

/// Parses `probe_id,iso8601,hop1 hop2 ...` lines; hopless records are
/// skipped and tallied.
TracerouteLoadResult load_traceroutes(std::istream& in);

enum class BaselineMethod { GHARAIBEH_DEFAULT_COORD, GHARAIBEH_SHARED_ROUTER, DARWICH_PRUNED };

const char* to_string(BaselineMethod m);

struct DefaultCoordEvidence {
  std::string country_code;
  double centroid_distance_km = 0.0;
};

struct SharedRouterEvidence {
  std::string router_ip;
  registry::ProbeId peer_probe_id = 0;
  double pairwise_km = 0.0;
};

struct PrunedEvidence {
  std::int64_t violation_count_at_pruning = 0;
};

struct BaselineFlag {
  registry::ProbeId probe_id = 0;
  BaselineMethod method = BaselineMethod::GHARAIBEH_DEFAULT_COORD;
  std::variant<DefaultCoordEvidence, SharedRouterEvidence, PrunedEvidence> evidence;
};

struct GharaibehConfig {
  double router_distance_km = 100.0;
  double centroid_match_km = 1.0;  // 0 selects exact coordinate match
  bool first_hop_only = false;
};

/// The Gharaibeh et al. sanity checks: probes pinned at (or within
/// centroid_match_km of) their country centroid, and shared-router groups
/// whose reported pins sit more than router_distance_km apart.
std::vector<BaselineFlag> gharaibeh_flags(
    const std::map<registry::ProbeId, registry::ProbeRecord>& probes,
    const std::vector<TracerouteRecord>& traceroutes, const detector::CentroidTable& centroids,
    timeutil::UnixSeconds at, const GharaibehConfig& config = {});

using AnchorId = registry::ProbeId;

/// Sparse symmetric matrix of minimum pair RTTs between anchors.
struct AnchorMesh {
  std::map<AnchorId, geo::GeoPoint> locations;
  std::map<std::pair<AnchorId, AnchorId>, double> min_rtt_ms;  // key ordered (a < b)

  void add_pair(AnchorId a, AnchorId b, double rtt_ms);
  std::optional<double> rtt(AnchorId a, AnchorId b) const;
};

struct PruneResult {
  std::set<AnchorId> validated;
  std::vector<BaselineFlag> pruned;  // removal order
};

/// The Darwich et al. anchor stage: repeatedly drop the anchor with the most
/// violating pairs (ties to the smallest id) until no pair violates. Anchors
/// self-report exact locations, so the error radius is zero.
PruneResult darwich_prune(const AnchorMesh& mesh, double guard_ms = 0.0);

/// The Darwich et al. probe stage: flag probes violating against any
/// validated anchor.
std::vector<BaselineFlag> darwich_probe_stage(
    const std::map<registry::ProbeId, std::map<AnchorId, double>>& probe_rtts,
    const std::map<registry::ProbeId, geo::GeoPoint>& probe_locations,
    const std::map<AnchorId, geo::GeoPoint>& anchor_locations,
    const std::set<AnchorId>& validated, double guard_ms = 0.0);

struct MethodComparison {
  std::int64_t primary_flags = 0;
  std::int64_t baseline_flags = 0;
  std::int64_t both = 0;
  std::set<registry::ProbeId> only_primary;
  std::set<registry::ProbeId> only_baseline;
  // Pair-measurement cost: V*P for the primary method, A^2 + A*P for the
  // Darwich pipeline.
  std::int64_t primary_pair_cost = 0;
  std::int64_t darwich_pair_cost = 0;
  double cost_ratio = 0.0;
};

MethodComparison compare_methods(const std::set<registry::ProbeId>& primary_flagged,
                                 const std::set<registry::ProbeId>& baseline_flagged,
                                 std::int64_t n_vps, std::int64_t n_probes,
                                 std::int64_t n_anchors);

}  // namespace soiverify::baselines

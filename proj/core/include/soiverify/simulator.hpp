#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "soiverify/detector.hpp"
#include "soiverify/registry.hpp"

namespace soiverify::sim {

/// A sampling distribution over non-negative reals.
struct Dist {
  enum class Kind { FIXED, UNIFORM };
  Kind kind = Kind::FIXED;
  double a = 0.0;  // FIXED value, or UNIFORM low
  double b = 0.0;  // UNIFORM high

  static Dist fixed(double v) { return {Kind::FIXED, v, v}; }
  static Dist uniform(double lo, double hi) { return {Kind::UNIFORM, lo, hi}; }

  double sample(double u) const;  // u in [0,1)
  void validate() const;          // throws on negative support
};

/// Weighted mixture; a single component degenerates to that distribution.
struct Mixture {
  std::vector<std::pair<double, Dist>> components;  // (weight, dist)

  static Mixture of(Dist d) { return {{{1.0, d}}}; }
  double sample(double u_pick, double u_value) const;
  void validate() const;
};

struct SimScenario {
  std::uint64_t seed = 1;
  std::int64_t n_probes = 100;
  std::int64_t n_vps = 10;
  double misreport_fraction = 0.1;
  Mixture displacement_km = Mixture::of(Dist::fixed(1000.0));
  Dist inflation_factor = Dist::uniform(0.0, 1.0);  // multiplicative path stretch
  Dist jitter_ms = Dist::uniform(0.0, 2.0);         // additive delay
  double free_space_fraction = 0.0;                 // fraction of Starlink probes
  // Negative control: allow sub-physical RTTs so the soundness property is
  // expected to break.
  bool allow_subphysical = false;

  void validate() const;
};

struct SimWorld {
  std::map<registry::ProbeId, registry::ProbeRecord> probes;  // reported locations
  registry::VpRegistry vps;
  std::vector<ingest::LatencyObservation> observations;
  std::set<registry::ProbeId> truth;                       // actually misreported
  std::map<registry::ProbeId, double> displacement_km;     // planted displacement
};

/// Deterministic world generation: probes on uniform random sphere points,
/// misreported probes displaced along a random bearing, RTTs generated from
/// the TRUE location so every measured RTT respects the physical bound
/// (unless allow_subphysical is set). Per-pair randomness is counter-based,
/// keyed by (seed, vp, probe), so generation order does not matter.
SimWorld generate(const SimScenario& scenario);

struct RecallBucket {
  double lo_km = 0.0;
  double hi_km = 0.0;
  std::int64_t truth_count = 0;
  std::int64_t flagged_count = 0;
  double recall = 0.0;
};

struct SimResult {
  double precision = 1.0;
  double recall = 0.0;
  std::vector<RecallBucket> recall_by_displacement;
  std::set<registry::ProbeId> flagged;
  std::set<registry::ProbeId> truth;
};

/// Runs the primary detector over a generated world and scores it against
/// the planted truth.
SimResult evaluate(const SimScenario& scenario,
                   const detector::DetectionConfig& config = {},
                   const std::vector<double>& bucket_edges_km = {0, 50, 100, 250, 500, 1000,
                                                                 2500, 5000, 20100});

}  // namespace soiverify::sim

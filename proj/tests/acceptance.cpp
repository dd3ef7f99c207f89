// Release gate: one check per acceptance criterion, one PASS/FAIL line each,
// with wall-clock budgets enforced.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "soiverify/baselines.hpp"
#include "soiverify/detector.hpp"
#include "soiverify/geo.hpp"
#include "soiverify/longitudinal.hpp"
#include "soiverify/registry.hpp"
#include "soiverify/simulator.hpp"
#include "soiverify/soi.hpp"

namespace fs = std::filesystem;
using namespace soiverify;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw CheckFailure(what);
}

int g_failures = 0;

void run_check(int number, const char* title, double budget_s, const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  std::string failure;
  try {
    fn();
  } catch (const std::exception& e) {
    failure = e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (failure.empty() && elapsed > budget_s) {
    failure = "took " + std::to_string(elapsed) + " s, budget " + std::to_string(budget_s);
  }
  if (failure.empty()) {
    std::printf("PASS %d %s (%.2f s)\n", number, title, elapsed);
  } else {
    std::printf("FAIL %d %s: %s\n", number, title, failure.c_str());
    ++g_failures;
  }
}

// ------------------------------------------------------------ 1 geodesy

double law_of_cosines_km(const geo::GeoPoint& a, const geo::GeoPoint& b) {
  const double rad = M_PI / 180.0;
  const double p1 = a.lat_deg() * rad, p2 = b.lat_deg() * rad;
  const double dl = (b.lon_deg() - a.lon_deg()) * rad;
  double c = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  c = std::clamp(c, -1.0, 1.0);
  return geo::kEarthRadiusKm * std::acos(c);
}

void check_geodesy() {
  std::mt19937_64 rng(20240501);
  std::uniform_real_distribution<double> lat(-89.9, 89.9), lon(-180.0, 180.0);
  for (int i = 0; i < 1000; ++i) {
    geo::GeoPoint a(lat(rng), lon(rng)), b(lat(rng), lon(rng));
    const double ours = geo::haversine(a, b).value;
    const double oracle = law_of_cosines_km(a, b);
    if (oracle > 1.0) {
      require(std::abs(ours - oracle) / oracle < 1e-6,
              "relative error too large at pair " + std::to_string(i));
    }
  }
  const double anti = geo::haversine({0.0, 0.0}, {0.0, 180.0}).value;
  require(std::abs(anti - M_PI * 6371.0088) < 0.1, "antipodal distance off");
}

// ------------------------------------------------------------ 2 case study

registry::ProbeRecord german_probe(bool with_update) {
  registry::ProbeRecord p;
  p.probe_id = 822;
  p.country_code = with_update ? "BN" : "DE";
  p.location_history.push_back({0, geo::GeoPoint(52.5200, 13.4050)});
  if (with_update) {
    p.location_history.push_back({1'000'000, geo::GeoPoint(4.9031, 114.9398)});
  }
  return p;
}

void check_case_study() {
  auto vps = registry::builtin_only_registry();
  ingest::LatencyObservation obs{"ripe-singapore", 822, 2'000'000, 23.0, 1};
  // before the update: reported Germany, 23 ms to Singapore
  {
    std::map<registry::ProbeId, registry::ProbeRecord> probes{{822, german_probe(false)}};
    auto report = detector::detect({obs}, probes, vps, {});
    require(report.violating_probes.count(822) == 1, "pre-update probe not flagged");
    const double radius_mi = geo::miles_from_km(soi::max_radius_km(23.0, soi::Medium::FIBER));
    require(std::abs(radius_mi - 1430.0) <= 30.0,
            "max radius " + std::to_string(radius_mi) + " mi outside 1430 +/- 30");
  }
  // after the update: reported Brunei, same observation is physically fine
  {
    std::map<registry::ProbeId, registry::ProbeRecord> probes{{822, german_probe(true)}};
    auto report = detector::detect({obs}, probes, vps, {});
    require(report.violating_probes.empty(), "post-update probe still flagged");
  }
}

// ------------------------------------------------------------ 3 margins

void check_margins() {
  registry::VpRegistry vps;
  vps.vps.emplace("jnb", registry::VantagePoint{"jnb", geo::GeoPoint(-26.2041, 28.0473), 0.0,
                                                registry::VpKind::EXACT});
  auto one_probe = [](registry::ProbeId id, double lat, double lon, const char* cc) {
    registry::ProbeRecord p;
    p.probe_id = id;
    p.country_code = cc;
    p.location_history.push_back({0, geo::GeoPoint(lat, lon)});
    return p;
  };
  std::map<registry::ProbeId, registry::ProbeRecord> probes{
      {1, one_probe(1, -24.6282, 25.9231, "BW")},   // Gaborone
      {2, one_probe(2, -15.3875, 28.3228, "ZM")}};  // Lusaka
  std::vector<ingest::LatencyObservation> obs{
      {"jnb", 1, 0, 0.33, 1},
      {"jnb", 2, 0, 1.16, 1},
  };
  auto report = detector::detect(obs, probes, vps, {});
  require(report.records.size() == 2, "expected both fixtures to violate");
  for (const auto& rec : report.records) {
    if (rec.probe_id == 1) {
      require(std::abs(rec.margin_ms - 2.5) <= 0.3,
              "Gaborone margin " + std::to_string(rec.margin_ms));
      const double radius_mi = geo::miles_from_km(soi::max_radius_km(0.33, soi::Medium::FIBER));
      require(std::abs(radius_mi - 20.5) <= 1.0,
              "Gaborone radius " + std::to_string(radius_mi) + " mi");
    } else {
      require(std::abs(rec.margin_ms - 10.8) <= 0.3,
              "Lusaka margin " + std::to_string(rec.margin_ms));
    }
  }
}

// ------------------------------------------------------------ 4 simulator

void check_simulator() {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    sim::SimScenario sc;
    sc.seed = seed;
    sc.n_probes = 1000;
    sc.n_vps = 50;
    sc.misreport_fraction = 0.3;
    sc.displacement_km = sim::Mixture{{{0.5, sim::Dist::uniform(10, 500)},
                                       {0.5, sim::Dist::uniform(500, 8000)}}};
    sc.free_space_fraction = 0.1;
    auto result = sim::evaluate(sc);
    require(result.precision == 1.0,
            "false positive at seed " + std::to_string(seed));
  }
  // recall must not drop as the planted displacement grows
  sim::SimScenario sweep;
  sweep.seed = 77;
  sweep.n_probes = 1000;
  sweep.n_vps = 50;
  sweep.misreport_fraction = 0.5;
  sweep.inflation_factor = sim::Dist::fixed(0.3);
  sweep.jitter_ms = sim::Dist::fixed(1.0);
  double prev = -1.0;
  for (double d : {100.0, 300.0, 1000.0, 3000.0, 8000.0}) {
    sweep.displacement_km = sim::Mixture::of(sim::Dist::fixed(d));
    auto result = sim::evaluate(sweep);
    require(result.recall >= prev, "recall dropped at displacement " + std::to_string(d));
    prev = result.recall;
  }
  require(prev > 0.9, "recall at 8000 km only " + std::to_string(prev));
}

// ------------------------------------------------------------ 5 prune

void check_prune() {
  std::mt19937_64 rng(555);
  std::uniform_real_distribution<double> lat(-60.0, 60.0), lon(-180.0, 180.0);
  for (int instance = 0; instance < 20; ++instance) {
    std::map<baselines::AnchorId, geo::GeoPoint> true_loc, reported;
    for (baselines::AnchorId id = 0; id < 10; ++id) {
      geo::GeoPoint p(lat(rng), lon(rng));
      true_loc.emplace(id, p);
      reported.emplace(id, p);
    }
    const int n_planted = 1 + static_cast<int>(rng() % 3);
    std::set<baselines::AnchorId> planted;
    while (static_cast<int>(planted.size()) < n_planted) {
      baselines::AnchorId victim = static_cast<baselines::AnchorId>(rng() % 10);
      if (!planted.insert(victim).second) continue;
      const auto& t = true_loc.at(victim);
      // report roughly the antipode
      reported.at(victim) = geo::GeoPoint(
          -t.lat_deg(), t.lon_deg() >= 0 ? t.lon_deg() - 180.0 : t.lon_deg() + 180.0);
    }
    baselines::AnchorMesh mesh;
    mesh.locations = reported;
    for (baselines::AnchorId a = 0; a < 10; ++a) {
      for (baselines::AnchorId b = a + 1; b < 10; ++b) {
        const auto bound =
            soi::min_rtt_bound(geo::haversine(true_loc.at(a), true_loc.at(b)), 0.0,
                               soi::Medium::FIBER);
        mesh.add_pair(a, b, bound.bound_ms * 1.2 + 1.0);
      }
    }
    auto violates = [&](baselines::AnchorId a, baselines::AnchorId b) {
      const auto bound = soi::min_rtt_bound(
          geo::haversine(reported.at(a), reported.at(b)), 0.0, soi::Medium::FIBER);
      return soi::is_violation(*mesh.rtt(a, b), bound);
    };
    auto result = baselines::darwich_prune(mesh);
    for (auto a : result.validated) {
      for (auto b : result.validated) {
        if (a < b) require(!violates(a, b), "survivor pair still violates");
      }
    }
    for (auto id : planted) {
      bool any = false;
      for (baselines::AnchorId other = 0; other < 10; ++other) {
        if (other != id && violates(std::min(id, other), std::max(id, other))) any = true;
      }
      if (any) require(!result.validated.count(id), "violating misreporter survived");
    }
  }
}

// ------------------------------------------------------------ 6 over-flagging

void check_overflagging() {
  // 300 probes behind one router, pins spread over ~500 km, 10 of them with
  // physically impossible measurements
  std::map<registry::ProbeId, registry::ProbeRecord> probes;
  std::vector<baselines::TracerouteRecord> traceroutes;
  registry::VpRegistry vps;
  vps.vps.emplace("vp", registry::VantagePoint{"vp", geo::GeoPoint(48.8566, 2.3522), 0.0,
                                               registry::VpKind::EXACT});
  std::vector<ingest::LatencyObservation> obs;
  for (registry::ProbeId id = 1; id <= 300; ++id) {
    registry::ProbeRecord p;
    p.probe_id = id;
    p.country_code = "FR";
    const double lon = 4.0 + 0.01 * static_cast<double>(id);  // 120 to 340 km from the VP
    p.location_history.push_back({0, geo::GeoPoint(48.8566, lon)});
    probes.emplace(id, p);
    traceroutes.push_back({id, 0, {"10.9.9.9"}});
    const auto bound =
        soi::min_rtt_bound(geo::haversine(geo::GeoPoint(48.8566, 2.3522),
                                          geo::GeoPoint(48.8566, lon)),
                           1.0, soi::Medium::FIBER);
    const bool planted = id <= 10;
    obs.push_back({"vp", id, 0, planted ? bound.bound_ms * 0.2 + 0.01 : bound.bound_ms + 5.0, 1});
  }
  auto report = detector::detect(obs, probes, vps, {});
  require(report.violating_probes.size() == 10, "primary should flag exactly the planted ten");
  for (registry::ProbeId id = 1; id <= 10; ++id) {
    require(report.violating_probes.count(id) == 1, "planted probe missed");
  }
  auto flags = baselines::gharaibeh_flags(probes, traceroutes, {}, 0, {});
  std::set<registry::ProbeId> flagged;
  for (const auto& f : flags) flagged.insert(f.probe_id);
  require(flagged.size() == 300, "baseline should flag the whole shared-router group");
}

// ------------------------------------------------------------ 7 longitudinal

void check_longitudinal() {
  using namespace longitudinal;
  const timeutil::UnixSeconds week = timeutil::kSecondsPerWeek;
  auto probe_at = [](registry::ProbeId id, std::vector<registry::LocationEntry> hist) {
    registry::ProbeRecord p;
    p.probe_id = id;
    p.location_history = std::move(hist);
    return p;
  };
  const geo::GeoPoint berlin(52.5200, 13.4050), brunei(4.9031, 114.9398);

  auto windows = [&](std::initializer_list<int> weeks_list) {
    std::vector<timeutil::UnixSeconds> out;
    for (int w : weeks_list) out.push_back(static_cast<timeutil::UnixSeconds>(w) * week);
    return out;
  };
  // a long responding tail so end-of-data sits past every fixture
  std::vector<timeutil::UnixSeconds> tail;
  for (int w = 0; w <= 80; ++w) tail.push_back(w * week);

  // 1: update during the episode resolves it, weeks_to_update counted from onset
  {
    ProbeTimeline t{1, tail, windows({2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12})};
    std::map<registry::ProbeId, registry::ProbeRecord> probes{
        {1, probe_at(1, {{0, berlin}, {12 * week, brunei}})}};
    auto eps = build_episodes({t}, probes);
    require(eps.size() == 1 && eps[0].resolution == Resolution::LOCATION_UPDATE,
            "case 1 resolution");
    require(std::abs(*eps[0].weeks_to_update - 10.0) < 1e-9, "case 1 weeks_to_update");
  }
  // 2: still violating at end of data stays ONGOING
  {
    ProbeTimeline t{2, tail, windows({78, 79, 80})};
    std::map<registry::ProbeId, registry::ProbeRecord> probes{{2, probe_at(2, {{0, berlin}})}};
    auto eps = build_episodes({t}, probes);
    require(eps.size() == 1 && eps[0].resolution == Resolution::ONGOING, "case 2 resolution");
  }
  // 3: cessation while still responding, no update: MEASUREMENT_CHANGE
  {
    ProbeTimeline t{3, tail, windows({5, 6})};
    std::map<registry::ProbeId, registry::ProbeRecord> probes{{3, probe_at(3, {{0, berlin}})}};
    auto eps = build_episodes({t}, probes);
    require(eps.size() == 1 && eps[0].resolution == Resolution::MEASUREMENT_CHANGE,
            "case 3 resolution");
  }
  // 4: silence for 30 days after the last violation: DISCONNECTED
  {
    ProbeTimeline t{4, windows({0, 1, 2, 3}), windows({2, 3})};
    ProbeTimeline anchor{99, tail, {}};
    std::map<registry::ProbeId, registry::ProbeRecord> probes{
        {4, probe_at(4, {{0, berlin}})}, {99, probe_at(99, {{0, berlin}})}};
    auto eps = build_episodes({t, anchor}, probes);
    require(eps.size() == 1 && eps[0].resolution == Resolution::DISCONNECTED,
            "case 4 resolution");
  }
  // 5: a single missed week does not split an episode
  {
    ProbeTimeline t{5, tail, windows({2, 4, 5})};
    std::map<registry::ProbeId, registry::ProbeRecord> probes{{5, probe_at(5, {{0, berlin}})}};
    auto eps = build_episodes({t}, probes);
    require(eps.size() == 1, "case 5 episode count");
  }
  // 6: a gap beyond tolerance does split
  {
    ProbeTimeline t{6, tail, windows({2, 10, 11})};
    std::map<registry::ProbeId, registry::ProbeRecord> probes{{6, probe_at(6, {{0, berlin}})}};
    auto eps = build_episodes({t}, probes);
    require(eps.size() == 2, "case 6 episode count");
    require(eps[0].last_violation < eps[1].first_violation, "case 6 ordering");
  }
  // 7: empty location history is flagged, not misclassified
  {
    ProbeTimeline t{7, tail, windows({2, 3})};
    std::map<registry::ProbeId, registry::ProbeRecord> probes{{7, probe_at(7, {})}};
    auto eps = build_episodes({t}, probes);
    require(eps.size() == 1 && eps[0].missing_history, "case 7 missing history");
  }
  // 8: update and cessation in the same window: the update wins
  {
    ProbeTimeline t{8, tail, windows({2, 3, 4})};
    std::map<registry::ProbeId, registry::ProbeRecord> probes{
        {8, probe_at(8, {{0, berlin}, {4 * week + 1, brunei}})}};
    auto eps = build_episodes({t}, probes);
    require(eps[0].resolution == Resolution::LOCATION_UPDATE, "case 8 resolution");
  }
  // 9: location change distance matches the geodesic
  {
    ProbeTimeline t{9, tail, windows({2, 3})};
    std::map<registry::ProbeId, registry::ProbeRecord> probes{
        {9, probe_at(9, {{0, berlin}, {5 * week, brunei}})}};
    auto eps = build_episodes({t}, probes);
    require(eps[0].resolution == Resolution::LOCATION_UPDATE, "case 9 resolution");
    const double km = location_change_distance(eps[0]).value;
    require(std::abs(km - geo::haversine(berlin, brunei).value) < 1e-9, "case 9 distance");
  }
  // 10: multiple episodes for one probe stay disjoint and ordered
  {
    ProbeTimeline t{10, tail, windows({2, 3, 20, 21, 40})};
    std::map<registry::ProbeId, registry::ProbeRecord> probes{{10, probe_at(10, {{0, berlin}})}};
    auto eps = build_episodes({t}, probes);
    require(eps.size() == 3, "case 10 episode count");
    for (std::size_t i = 1; i < eps.size(); ++i) {
      require(eps[i - 1].last_violation < eps[i].first_violation, "case 10 disjointness");
    }
  }
}

// ------------------------------------------------------------ 8 scale

void check_scale() {
  sim::SimScenario sc;
  sc.seed = 2024;
  sc.n_probes = 13'000;
  sc.n_vps = 157;
  sc.misreport_fraction = 0.05;
  auto world = sim::generate(sc);
  auto report = detector::detect(world.observations, world.probes, world.vps, {});
  require(report.scanned_pairs == 13'000 * 157,
          "expected about 2M pairs, scanned " + std::to_string(report.scanned_pairs));

  const fs::path dir = fs::temp_directory_path() / "soiverify_scale_check";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "violations.csv");
    out << "probe_id,vp_id,window_start,measured_rtt_ms,bound_rtt_ms,margin_ms,"
           "min_distance_error_km\n";
    for (const auto& r : report.records) {
      out << r.probe_id << ',' << r.vp_id << ',' << r.window_start << ',' << r.measured_rtt_ms
          << ',' << r.bound_rtt_ms << ',' << r.margin_ms << ',' << r.min_distance_error_km
          << '\n';
    }
  }
  {
    std::ofstream out(dir / "countries.csv");
    for (const auto& agg : report.country_aggregates) {
      out << agg.country_code << ',' << agg.violator_count << ',' << agg.probe_count << '\n';
    }
  }
  {
    std::ofstream out(dir / "error_cdf.csv");
    for (const auto& [v, f] : detector::error_cdf(report)) out << v << ',' << f << '\n';
  }
  {
    std::ofstream out(dir / "probe_summary.csv");
    for (const auto& [id, e] : detector::per_probe_max_error(report)) out << id << ',' << e << '\n';
  }
  for (const char* f : {"violations.csv", "countries.csv", "error_cdf.csv", "probe_summary.csv"}) {
    require(fs::file_size(dir / f) > 0, std::string("artifact ") + f + " is empty");
  }
  require(!report.violating_probes.empty(), "planted misreports should surface at scale");
  fs::remove_all(dir);
}

// ------------------------------------------------------------ 9 cost

void check_cost() {
  auto cmp = baselines::compare_methods({}, {}, 157, 13'000, 1'300);
  require(cmp.primary_pair_cost == 157LL * 13'000LL, "primary pair cost");
  require(cmp.darwich_pair_cost == 1'300LL * 1'300LL + 1'300LL * 13'000LL, "darwich pair cost");
  require(cmp.cost_ratio == static_cast<double>(cmp.darwich_pair_cost) /
                                static_cast<double>(cmp.primary_pair_cost),
          "cost ratio arithmetic");
  require(cmp.cost_ratio > 9.0 && cmp.cost_ratio < 9.2,
          "cost ratio " + std::to_string(cmp.cost_ratio) + " not about 9x");
}

}  // namespace

int main() {
  run_check(1, "geodesy oracle equivalence", 1.0, check_geodesy);
  run_check(2, "reported-Germany case study flags and clears", 1.0, check_case_study);
  run_check(3, "southern-Africa margin fixtures", 1.0, check_margins);
  run_check(4, "simulator soundness and recall monotonicity", 60.0, check_simulator);
  run_check(5, "anchor prune correctness on seeded instances", 5.0, check_prune);
  run_check(6, "shared-router heuristic over-flagging shape", 5.0, check_overflagging);
  run_check(7, "longitudinal episode definitions", 1.0, check_longitudinal);
  run_check(8, "two-million-pair scan with artifacts", 300.0, check_scale);
  run_check(9, "measurement cost accounting", 1.0, check_cost);
  if (g_failures) {
    std::printf("%d check(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all checks passed\n");
  return 0;
}

// soiverify: batch pipeline for checking operator-reported probe locations
// against physical round-trip-time lower bounds.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "soiverify/atlas_client.hpp"
#include "soiverify/baselines.hpp"
#include "soiverify/detector.hpp"
#include "soiverify/ingest.hpp"
#include "soiverify/longitudinal.hpp"
#include "soiverify/manifest.hpp"
#include "soiverify/registry.hpp"
#include "soiverify/simulator.hpp"
#include "soiverify/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace soiverify;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataQuality = 1;
constexpr int kExitIo = 2;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  return in;
}

std::ofstream open_output(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

// Defaults plus everything a config file may override. All of it feeds the
// detection fingerprint so reports carry their exact parameterization.
struct ToolConfig {
  detector::DetectionConfig detection;
  double city_radius_km = registry::kDefaultCityRadiusKm;
  double centroid_threshold_km = detector::kDefaultCentroidThresholdKm;
  longitudinal::EpisodeConfig episodes;
  baselines::GharaibehConfig gharaibeh;
  std::map<std::string, std::string> snapshot;  // for manifests

  void record() {
    snapshot["guard_ms"] = fmt(detection.guard_ms);
    snapshot["probe_anonymization_km"] = fmt(detection.probe_anonymization_km);
    snapshot["probe_anonymization_enabled"] =
        detection.probe_anonymization_enabled ? "true" : "false";
    snapshot["fiber_speed_km_per_s"] = fmt(detection.fiber_speed_km_per_s);
    snapshot["free_space_speed_km_per_s"] = fmt(detection.free_space_speed_km_per_s);
    snapshot["city_radius_km"] = fmt(city_radius_km);
    snapshot["centroid_threshold_km"] = fmt(centroid_threshold_km);
    snapshot["gap_tolerance_s"] = std::to_string(episodes.gap_tolerance);
    snapshot["disconnect_threshold_s"] = std::to_string(episodes.disconnect_threshold);
    snapshot["router_distance_km"] = fmt(gharaibeh.router_distance_km);
    snapshot["centroid_match_km"] = fmt(gharaibeh.centroid_match_km);
  }
};

ToolConfig load_tool_config(const std::string& config_file) {
  ToolConfig cfg;
  if (!config_file.empty()) {
    auto in = open_input(config_file);
    json doc = json::parse(in, nullptr, true);
    auto get = [&](const char* key, auto& slot) {
      if (doc.contains(key)) slot = doc.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("guard_ms", cfg.detection.guard_ms);
    get("probe_anonymization_km", cfg.detection.probe_anonymization_km);
    get("probe_anonymization_enabled", cfg.detection.probe_anonymization_enabled);
    get("fiber_speed_km_per_s", cfg.detection.fiber_speed_km_per_s);
    get("free_space_speed_km_per_s", cfg.detection.free_space_speed_km_per_s);
    get("city_radius_km", cfg.city_radius_km);
    get("centroid_threshold_km", cfg.centroid_threshold_km);
    get("gap_tolerance_s", cfg.episodes.gap_tolerance);
    get("disconnect_threshold_s", cfg.episodes.disconnect_threshold);
    get("router_distance_km", cfg.gharaibeh.router_distance_km);
    get("centroid_match_km", cfg.gharaibeh.centroid_match_km);
    get("first_hop_only", cfg.gharaibeh.first_hop_only);
  }
  cfg.record();
  return cfg;
}

struct CommonArgs {
  std::string store_dir = "store";
  std::string probes_file;
  std::string vps_file;
  std::string out_dir = "out";
  std::string config_file;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--store", args.store_dir, "Observation store directory");
  cmd->add_option("--probes", args.probes_file, "Probe archive (newline-delimited JSON)");
  cmd->add_option("--vps", args.vps_file, "Extra vantage points (newline-delimited JSON)");
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--config", args.config_file, "JSON config overriding defaults");
}

registry::VpRegistry load_vps(const CommonArgs& args, const ToolConfig& cfg) {
  if (args.vps_file.empty()) return registry::builtin_only_registry(cfg.city_radius_km);
  auto in = open_input(args.vps_file);
  auto reg = registry::load_vp_registry(in, cfg.city_radius_km);
  for (const auto& err : reg.errors) {
    std::cerr << "vps line " << err.line_no << ": " << err.message << "\n";
  }
  return reg;
}

registry::ProbeArchive load_probes(const CommonArgs& args) {
  if (args.probes_file.empty()) throw IoError("--probes is required for this command");
  auto in = open_input(args.probes_file);
  auto archive = registry::load_probe_archive(in);
  for (const auto& err : archive.errors) {
    std::cerr << "probes line " << err.line_no << ": " << err.message << "\n";
  }
  return archive;
}

manifest::RunManifest start_manifest(const std::string& command, const ToolConfig& cfg) {
  manifest::RunManifest m;
  m.command = command;
  m.config = cfg.snapshot;
  m.started_at = std::time(nullptr);
  return m;
}

void finish_manifest(manifest::RunManifest& m, const fs::path& out_dir) {
  m.finished_at = std::time(nullptr);
  m.write(out_dir / "manifest.json");
}

void add_store_inputs(manifest::RunManifest& m, const store::ObservationStore& st) {
  for (const auto& entry : fs::directory_iterator(st.dir())) {
    if (entry.path().extension() == ".records") m.add_input(entry.path());
  }
}

// ---------------------------------------------------------------- fetch

int cmd_fetch(const CommonArgs& common, const std::string& campaign_file,
              const std::string& fixture_dir, const std::string& measurements_file,
              const std::string& from_str, const std::string& to_str,
              const std::string& api_base) {
  ToolConfig cfg = load_tool_config(common.config_file);
  auto vps = load_vps(common, cfg);
  fs::create_directories(common.store_dir);
  store::StoreLock lock(common.store_dir);
  store::ObservationStore st(common.store_dir);
  manifest::RunManifest m = start_manifest("fetch", cfg);

  std::vector<ingest::LatencyObservation> observations;
  auto ingest_campaign = [&](const fs::path& file, timeutil::UnixSeconds window) {
    auto in = open_input(file);
    auto loaded = ingest::load_ping_campaign(in, vps);
    if (loaded.malformed_lines) {
      std::cerr << file.string() << ": " << loaded.malformed_lines << " malformed lines\n";
    }
    auto agg = ingest::aggregate_min_rtt(loaded.samples, window);
    observations.insert(observations.end(), agg.observations.begin(), agg.observations.end());
    m.add_input(file);
  };

  if (!campaign_file.empty()) {
    ingest_campaign(campaign_file, ingest::kCampaignWindowSeconds);
  } else if (!fixture_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(fixture_dir)) {
      if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) ingest_campaign(f, ingest::kHistoricalWindowSeconds);
  } else {
    if (measurements_file.empty() || from_str.empty() || to_str.empty()) {
      throw IoError("live fetch needs --measurements, --from and --to");
    }
    auto from = timeutil::parse_iso8601(from_str);
    auto to = timeutil::parse_iso8601(to_str);
    if (!from || !to) throw IoError("bad --from/--to timestamp");
    auto archive = load_probes(common);
    std::set<registry::ProbeId> probe_ids;
    for (const auto& [id, probe] : archive.probes) probe_ids.insert(id);
    auto min = open_input(measurements_file);
    auto mapping = atlas::load_measurement_config(min);
    m.add_input(measurements_file);
    const char* key = std::getenv("SOI_ATLAS_KEY");
    atlas::HttpTransport transport(key ? key : "");
    atlas::FetchOptions options;
    if (!api_base.empty()) options.api_base = api_base;
    atlas::AtlasClient client(transport, options);
    auto fetched = client.fetch_builtin_measurements(mapping, probe_ids, *from, *to);
    if (fetched.malformed_docs) {
      std::cerr << fetched.malformed_docs << " malformed result documents\n";
    }
    auto agg = ingest::aggregate_min_rtt(fetched.samples, ingest::kHistoricalWindowSeconds);
    observations = std::move(agg.observations);
  }

  const std::int64_t changed = st.upsert(observations);
  std::cout << "fetched " << observations.size() << " observations, " << changed
            << " inserted or improved\n";
  fs::create_directories(common.out_dir);
  add_store_inputs(m, st);
  finish_manifest(m, common.out_dir);
  return kExitOk;
}

// ---------------------------------------------------------------- detect

void write_violations_csv(const fs::path& file, const detector::DetectionReport& report) {
  auto out = open_output(file);
  out << "probe_id,vp_id,window_start,measured_rtt_ms,bound_rtt_ms,margin_ms,"
         "min_distance_error_km\n";
  for (const auto& r : report.records) {
    out << r.probe_id << ',' << r.vp_id << ',' << r.window_start << ','
        << fmt(r.measured_rtt_ms) << ',' << fmt(r.bound_rtt_ms) << ',' << fmt(r.margin_ms)
        << ',' << fmt(r.min_distance_error_km) << '\n';
  }
}

void write_country_tables(const fs::path& dir, const std::string& stem,
                          const std::vector<detector::CountryAggregate>& rows,
                          manifest::RunManifest& m) {
  auto csv = open_output(dir / (stem + ".csv"));
  csv << "country_code,violator_count,probe_count,violator_pct\n";
  for (const auto& row : rows) {
    csv << row.country_code << ',' << row.violator_count << ',' << row.probe_count << ','
        << fmt(row.violator_pct) << '\n';
  }
  csv.close();
  auto txt = open_output(dir / (stem + ".txt"));
  txt << "country  violators    probes     pct\n";
  for (const auto& row : rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-7s  %9lld  %8lld  %6.2f\n", row.country_code.c_str(),
                  static_cast<long long>(row.violator_count),
                  static_cast<long long>(row.probe_count), row.violator_pct);
    txt << line;
  }
  m.add_output(dir / (stem + ".csv"));
  m.add_output(dir / (stem + ".txt"));
}

void write_cdf_csv(const fs::path& file, const char* value_header,
                   const std::vector<std::pair<double, double>>& cdf) {
  auto out = open_output(file);
  out << value_header << ",cumulative_fraction\n";
  for (const auto& [value, frac] : cdf) out << fmt(value) << ',' << fmt(frac) << '\n';
}

int cmd_detect(const CommonArgs& common, bool latest, const std::string& at_str,
               std::optional<double> guard_ms, const std::string& centroids_file) {
  ToolConfig cfg = load_tool_config(common.config_file);
  if (guard_ms) cfg.detection.guard_ms = *guard_ms;
  cfg.record();
  auto vps = load_vps(common, cfg);
  auto archive = load_probes(common);
  store::ObservationStore st(common.store_dir);
  manifest::RunManifest m = start_manifest("detect", cfg);
  m.add_input(common.probes_file);
  add_store_inputs(m, st);

  std::vector<ingest::LatencyObservation> observations;
  auto windows = st.window_starts();
  if (windows.empty()) throw IoError("observation store is empty");
  if (latest || !at_str.empty()) {
    timeutil::UnixSeconds pivot;
    if (latest) {
      pivot = windows.back();
    } else {
      auto at = timeutil::parse_iso8601(at_str);
      if (!at) throw IoError("bad --at timestamp");
      // last window starting at or before the requested instant
      auto it = std::upper_bound(windows.begin(), windows.end(), *at);
      if (it == windows.begin()) throw IoError("no observations at or before " + at_str);
      pivot = *std::prev(it);
    }
    observations = st.load_window(pivot, pivot + 1);
    m.config["window_start"] = std::to_string(pivot);
  } else {
    observations = st.load_all();
  }

  auto report = detector::detect(observations, archive.probes, vps, cfg.detection);
  // derived from the data, never the wall clock, so reruns are byte-identical
  for (const auto& obs : observations) {
    report.generated_at = std::max(report.generated_at, obs.window_start);
  }
  if (observations.empty()) report.generated_at = windows.back();

  fs::create_directories(common.out_dir);
  const fs::path out_dir = common.out_dir;
  write_violations_csv(out_dir / "violations.csv", report);
  m.add_output(out_dir / "violations.csv");
  write_country_tables(out_dir, "countries_by_count",
                       aggregate_by_country(report, archive.probes,
                                            detector::CountryOrder::BY_COUNT),
                       m);
  write_country_tables(out_dir, "countries_by_pct",
                       aggregate_by_country(report, archive.probes,
                                            detector::CountryOrder::BY_PCT),
                       m);
  write_cdf_csv(out_dir / "error_cdf.csv", "distance_error_km", detector::error_cdf(report));
  m.add_output(out_dir / "error_cdf.csv");

  detector::CentroidTable centroids;
  if (!centroids_file.empty()) {
    auto cin = open_input(centroids_file);
    centroids = detector::load_centroids(cin);
    m.add_input(centroids_file);
  }
  {
    auto out = open_output(out_dir / "probe_summary.csv");
    out << "probe_id,max_distance_error_km,near_country_centroid_suspect\n";
    for (const auto& [probe_id, max_err] : detector::per_probe_max_error(report)) {
      std::string centroid_note = "n/a";
      auto it = archive.probes.find(probe_id);
      if (it != archive.probes.end() && centroids.count(it->second.country_code)) {
        // annotation only: far-from-centroid pins are ordinary, exact centroid
        // pins often mean a default coordinate
        const bool far = detector::centroid_distance_check(
            it->second, centroids, report.generated_at, cfg.centroid_threshold_km);
        centroid_note = far ? "no" : "yes";
      }
      out << probe_id << ',' << fmt(max_err) << ',' << centroid_note << '\n';
    }
  }
  m.add_output(out_dir / "probe_summary.csv");

  {
    json summary = {
        {"scanned_pairs", report.scanned_pairs},
        {"violating_probes", report.violating_probes.size()},
        {"violation_records", report.records.size()},
        {"generated_at", timeutil::format_iso8601(report.generated_at)},
        {"config_fingerprint", report.config_fingerprint},
        {"skipped_unknown_probe", report.skipped_unknown_probe},
        {"skipped_unknown_vp", report.skipped_unknown_vp},
        {"skipped_no_location", report.skipped_no_location},
    };
    auto out = open_output(out_dir / "summary.json");
    out << summary.dump(2) << '\n';
  }
  m.add_output(out_dir / "summary.json");
  finish_manifest(m, out_dir);

  const std::int64_t considered = report.scanned_pairs + report.skipped_total();
  if (considered > 0 && report.skipped_total() * 10 > considered) {
    std::cerr << "data quality: " << report.skipped_total() << " of " << considered
              << " observations skipped (unknown probe " << report.skipped_unknown_probe
              << ", unknown vp " << report.skipped_unknown_vp << ", no location "
              << report.skipped_no_location << ")\n";
    return kExitDataQuality;
  }
  std::cout << report.violating_probes.size() << " violating probes across "
            << report.scanned_pairs << " pairs\n";
  return kExitOk;
}

// ---------------------------------------------------------------- history

int cmd_history(const CommonArgs& common) {
  ToolConfig cfg = load_tool_config(common.config_file);
  auto vps = load_vps(common, cfg);
  auto archive = load_probes(common);
  store::ObservationStore st(common.store_dir);
  if (st.window_starts().size() < 2) {
    std::cerr << "history requires >=2 windows\n";
    return kExitDataQuality;
  }
  manifest::RunManifest m = start_manifest("history", cfg);
  m.add_input(common.probes_file);
  add_store_inputs(m, st);

  auto observations = st.load_all();
  auto report = detector::detect(observations, archive.probes, vps, cfg.detection);
  auto timelines = longitudinal::timelines_from_report(observations, report);
  auto episodes = longitudinal::build_episodes(timelines, archive.probes, cfg.episodes);

  fs::create_directories(common.out_dir);
  const fs::path out_dir = common.out_dir;
  {
    auto out = open_output(out_dir / "episodes.csv");
    out << "probe_id,first_violation,last_violation,resolution,location_change_km,"
           "weeks_to_update,missing_history\n";
    for (const auto& ep : episodes) {
      out << ep.probe_id << ',' << ep.first_violation << ',' << ep.last_violation << ','
          << longitudinal::to_string(ep.resolution) << ','
          << (ep.location_change_km ? fmt(*ep.location_change_km) : "") << ','
          << (ep.weeks_to_update ? fmt(*ep.weeks_to_update) : "") << ','
          << (ep.missing_history ? "1" : "0") << '\n';
    }
  }
  m.add_output(out_dir / "episodes.csv");
  {
    auto out = open_output(out_dir / "violators_over_time.csv");
    out << "bucket_start,violating_probes,responding_probes,violating_ratio\n";
    for (const auto& b :
         longitudinal::violators_over_time(timelines, ingest::kHistoricalWindowSeconds)) {
      out << b.bucket_start << ',' << b.violating_probes << ',' << b.responding_probes << ','
          << fmt(b.violating_ratio) << '\n';
    }
  }
  m.add_output(out_dir / "violators_over_time.csv");
  write_cdf_csv(out_dir / "weeks_to_update_cdf.csv", "weeks_to_update",
                longitudinal::weeks_to_update_cdf(episodes));
  m.add_output(out_dir / "weeks_to_update_cdf.csv");
  {
    std::vector<double> changes;
    for (const auto& ep : episodes) {
      if (ep.location_change_km) changes.push_back(*ep.location_change_km);
    }
    std::sort(changes.begin(), changes.end());
    std::vector<std::pair<double, double>> cdf;
    for (std::size_t i = 0; i < changes.size(); ++i) {
      cdf.emplace_back(changes[i], static_cast<double>(i + 1) / changes.size());
    }
    write_cdf_csv(out_dir / "location_change_cdf.csv", "location_change_km", cdf);
  }
  m.add_output(out_dir / "location_change_cdf.csv");
  finish_manifest(m, out_dir);
  std::cout << episodes.size() << " episodes across " << timelines.size() << " probes\n";
  return kExitOk;
}

// ---------------------------------------------------------------- feed

int cmd_feed(const CommonArgs& common, std::int64_t stale_days) {
  ToolConfig cfg = load_tool_config(common.config_file);
  auto vps = load_vps(common, cfg);
  auto archive = load_probes(common);
  store::ObservationStore st(common.store_dir);
  auto windows = st.window_starts();
  if (windows.empty()) throw IoError("observation store is empty");
  manifest::RunManifest m = start_manifest("feed", cfg);
  m.add_input(common.probes_file);
  add_store_inputs(m, st);

  auto observations = st.load_window(windows.back(), windows.back() + 1);
  auto report = detector::detect(observations, archive.probes, vps, cfg.detection);
  report.generated_at = windows.back();

  fs::create_directories(common.out_dir);
  json doc = {
      {"generated_at", timeutil::format_iso8601(report.generated_at)},
      {"probe_ids", report.violating_probes},  // std::set serializes ascending
      {"method_version", manifest::kToolVersion},
  };
  auto out = open_output(fs::path(common.out_dir) / "feed.json");
  out << doc.dump(2) << '\n';
  out.close();
  m.add_output(fs::path(common.out_dir) / "feed.json");
  finish_manifest(m, common.out_dir);

  const auto age = std::time(nullptr) - report.generated_at;
  if (age > stale_days * timeutil::kSecondsPerDay) {
    std::cerr << "warning: latest detection window is " << age / timeutil::kSecondsPerDay
              << " days old\n";
  }
  std::cout << report.violating_probes.size() << " probes in feed\n";
  return kExitOk;
}

// ---------------------------------------------------------------- baseline

void write_flags_csv(const fs::path& file, const std::vector<baselines::BaselineFlag>& flags) {
  auto out = open_output(file);
  out << "probe_id,method,evidence\n";
  for (const auto& flag : flags) {
    out << flag.probe_id << ',' << baselines::to_string(flag.method) << ',';
    if (const auto* dc = std::get_if<baselines::DefaultCoordEvidence>(&flag.evidence)) {
      out << "centroid " << dc->country_code << " at " << fmt(dc->centroid_distance_km) << " km";
    } else if (const auto* sr = std::get_if<baselines::SharedRouterEvidence>(&flag.evidence)) {
      out << "router " << sr->router_ip << " shared with probe " << sr->peer_probe_id << " at "
          << fmt(sr->pairwise_km) << " km";
    } else if (const auto* pr = std::get_if<baselines::PrunedEvidence>(&flag.evidence)) {
      out << pr->violation_count_at_pruning << " violating pairs";
    }
    out << '\n';
  }
}

baselines::AnchorMesh load_anchor_mesh(const fs::path& file) {
  // `anchor,<id>,<lat>,<lon>` and `pair,<a>,<b>,<rtt_ms>` lines
  baselines::AnchorMesh mesh;
  auto in = open_input(file);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string kind, f1, f2, f3;
    if (!std::getline(ss, kind, ',') || !std::getline(ss, f1, ',') ||
        !std::getline(ss, f2, ',') || !std::getline(ss, f3)) {
      throw IoError(file.string() + ":" + std::to_string(line_no) + ": malformed mesh line");
    }
    if (kind == "anchor") {
      mesh.locations.emplace(std::stoll(f1), geo::GeoPoint(std::stod(f2), std::stod(f3)));
    } else if (kind == "pair") {
      mesh.add_pair(std::stoll(f1), std::stoll(f2), std::stod(f3));
    } else {
      throw IoError(file.string() + ":" + std::to_string(line_no) + ": unknown kind " + kind);
    }
  }
  return mesh;
}

int cmd_baseline(const CommonArgs& common, const std::string& method,
                 const std::string& traceroutes_file, const std::string& centroids_file,
                 const std::string& mesh_file, const std::string& at_str,
                 const std::string& primary_violations_file) {
  ToolConfig cfg = load_tool_config(common.config_file);
  manifest::RunManifest m = start_manifest("baseline-" + method, cfg);
  fs::create_directories(common.out_dir);
  const fs::path out_dir = common.out_dir;

  if (method == "gharaibeh") {
    auto archive = load_probes(common);
    m.add_input(common.probes_file);
    detector::CentroidTable centroids;
    if (!centroids_file.empty()) {
      auto in = open_input(centroids_file);
      centroids = detector::load_centroids(in);
      m.add_input(centroids_file);
    }
    std::vector<baselines::TracerouteRecord> traceroutes;
    if (!traceroutes_file.empty()) {
      auto in = open_input(traceroutes_file);
      auto loaded = baselines::load_traceroutes(in);
      if (loaded.malformed_lines) {
        std::cerr << loaded.malformed_lines << " malformed traceroute lines\n";
      }
      traceroutes = std::move(loaded.records);
      m.add_input(traceroutes_file);
    }
    timeutil::UnixSeconds at = std::time(nullptr);
    if (!at_str.empty()) {
      auto parsed = timeutil::parse_iso8601(at_str);
      if (!parsed) throw IoError("bad --at timestamp");
      at = *parsed;
    }
    auto flags =
        baselines::gharaibeh_flags(archive.probes, traceroutes, centroids, at, cfg.gharaibeh);
    write_flags_csv(out_dir / "baseline_flags.csv", flags);
    m.add_output(out_dir / "baseline_flags.csv");
    std::cout << flags.size() << " baseline flags\n";
  } else if (method == "darwich") {
    if (mesh_file.empty()) throw IoError("darwich needs --mesh");
    auto mesh = load_anchor_mesh(mesh_file);
    m.add_input(mesh_file);
    auto result = baselines::darwich_prune(mesh, cfg.detection.guard_ms);
    write_flags_csv(out_dir / "pruned_anchors.csv", result.pruned);
    m.add_output(out_dir / "pruned_anchors.csv");
    auto out = open_output(out_dir / "validated_anchors.txt");
    for (auto id : result.validated) out << id << '\n';
    out.close();
    m.add_output(out_dir / "validated_anchors.txt");
    std::cout << result.pruned.size() << " anchors pruned, " << result.validated.size()
              << " validated\n";
  } else if (method == "compare") {
    // violations.csv from `detect` vs baseline_flags.csv from this command
    if (primary_violations_file.empty() || traceroutes_file.empty()) {
      throw IoError("compare needs --primary (violations.csv) and --baseline-flags");
    }
    auto read_ids = [](const fs::path& file, int column) {
      std::set<registry::ProbeId> ids;
      std::ifstream in(file);
      if (!in) throw IoError("cannot open " + file.string());
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string field;
        for (int i = 0; i <= column; ++i) std::getline(ss, field, ',');
        if (!field.empty()) ids.insert(std::stoll(field));
      }
      return ids;
    };
    auto primary = read_ids(primary_violations_file, 0);
    auto baseline = read_ids(traceroutes_file, 0);
    m.add_input(primary_violations_file);
    m.add_input(traceroutes_file);
    auto archive = load_probes(common);
    std::int64_t anchors = 0;
    for (const auto& [id, probe] : archive.probes) anchors += probe.is_anchor ? 1 : 0;
    ToolConfig vcfg = load_tool_config(common.config_file);
    auto vps = load_vps(common, vcfg);
    auto cmp = baselines::compare_methods(primary, baseline,
                                          static_cast<std::int64_t>(vps.vps.size()),
                                          static_cast<std::int64_t>(archive.probes.size()),
                                          anchors);
    json doc = {
        {"primary_flags", cmp.primary_flags},
        {"baseline_flags", cmp.baseline_flags},
        {"both", cmp.both},
        {"only_primary", cmp.only_primary},
        {"only_baseline", cmp.only_baseline},
        {"primary_pair_cost", cmp.primary_pair_cost},
        {"darwich_pair_cost", cmp.darwich_pair_cost},
        {"cost_ratio", cmp.cost_ratio},
    };
    auto out = open_output(out_dir / "comparison.json");
    out << doc.dump(2) << '\n';
    out.close();
    m.add_output(out_dir / "comparison.json");
  } else {
    throw IoError("unknown baseline method " + method);
  }
  finish_manifest(m, out_dir);
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

sim::Dist parse_dist(const json& doc) {
  if (doc.contains("fixed")) return sim::Dist::fixed(doc.at("fixed").get<double>());
  if (doc.contains("uniform")) {
    auto arr = doc.at("uniform");
    return sim::Dist::uniform(arr.at(0).get<double>(), arr.at(1).get<double>());
  }
  throw IoError("distribution needs \"fixed\" or \"uniform\"");
}

sim::Mixture parse_mixture(const json& doc) {
  if (doc.is_array()) {
    sim::Mixture mix;
    for (const auto& comp : doc) {
      mix.components.emplace_back(comp.at("weight").get<double>(), parse_dist(comp.at("dist")));
    }
    return mix;
  }
  return sim::Mixture::of(parse_dist(doc));
}

int cmd_simulate(const CommonArgs& common, const std::string& scenario_file) {
  ToolConfig cfg = load_tool_config(common.config_file);
  auto in = open_input(scenario_file);
  json doc = json::parse(in);

  sim::SimScenario sc;
  if (doc.contains("seed")) sc.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("n_probes")) sc.n_probes = doc.at("n_probes").get<std::int64_t>();
  if (doc.contains("n_vps")) sc.n_vps = doc.at("n_vps").get<std::int64_t>();
  if (doc.contains("misreport_fraction")) {
    sc.misreport_fraction = doc.at("misreport_fraction").get<double>();
  }
  if (doc.contains("displacement_km")) sc.displacement_km = parse_mixture(doc.at("displacement_km"));
  if (doc.contains("inflation_factor")) sc.inflation_factor = parse_dist(doc.at("inflation_factor"));
  if (doc.contains("jitter_ms")) sc.jitter_ms = parse_dist(doc.at("jitter_ms"));
  if (doc.contains("free_space_fraction")) {
    sc.free_space_fraction = doc.at("free_space_fraction").get<double>();
  }
  if (doc.contains("allow_subphysical")) {
    sc.allow_subphysical = doc.at("allow_subphysical").get<bool>();
  }
  sc.validate();

  manifest::RunManifest m = start_manifest("simulate", cfg);
  m.add_input(scenario_file);
  auto result = sim::evaluate(sc, cfg.detection);

  fs::create_directories(common.out_dir);
  json buckets = json::array();
  for (const auto& b : result.recall_by_displacement) {
    buckets.push_back({{"lo_km", b.lo_km},
                       {"hi_km", b.hi_km},
                       {"truth_count", b.truth_count},
                       {"flagged_count", b.flagged_count},
                       {"recall", b.recall}});
  }
  json out_doc = {
      {"precision", result.precision},
      {"recall", result.recall},
      {"recall_by_displacement", buckets},
      {"flagged", result.flagged},
      {"truth", result.truth},
  };
  auto out = open_output(fs::path(common.out_dir) / "simulation.json");
  out << out_doc.dump(2) << '\n';
  out.close();
  m.add_output(fs::path(common.out_dir) / "simulation.json");
  finish_manifest(m, common.out_dir);
  std::cout << "precision " << result.precision << ", recall " << result.recall << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physical-bound verification of operator-reported probe locations"};
  app.require_subcommand(1);

  CommonArgs common;

  auto* fetch = app.add_subcommand("fetch", "Pull observations into the store");
  add_common(fetch, common);
  std::string campaign_file, fixture_dir, measurements_file, from_str, to_str, api_base;
  fetch->add_option("--campaign", campaign_file, "Single ping campaign CSV (12 h windows)");
  fetch->add_option("--fixture", fixture_dir, "Directory of campaign CSVs, weekly windows");
  fetch->add_option("--measurements", measurements_file, "Measurement-to-VP mapping JSON");
  fetch->add_option("--from", from_str, "Fetch range start (ISO 8601)");
  fetch->add_option("--to", to_str, "Fetch range end (ISO 8601)");
  fetch->add_option("--api-base", api_base, "Override the Atlas API base URL");

  auto* detect = app.add_subcommand("detect", "Scan the store for physical violations");
  add_common(detect, common);
  bool latest = false;
  std::string at_str, centroids_file;
  std::optional<double> guard_ms;
  detect->add_flag("--latest", latest, "Use only the newest window");
  detect->add_option("--at", at_str, "Use the window covering this instant (ISO 8601)");
  detect->add_option("--guard-ms", guard_ms, "Extra guard subtracted from the bound");
  detect->add_option("--centroids", centroids_file, "Country centroid CSV for annotations");

  auto* history = app.add_subcommand("history", "Episodes and longitudinal series");
  add_common(history, common);

  auto* feed = app.add_subcommand("feed", "Current violating-probe list document");
  add_common(feed, common);
  std::int64_t stale_days = 14;
  feed->add_option("--stale-days", stale_days, "Warn when the newest window is older");

  auto* baseline = app.add_subcommand("baseline", "Run a comparison method");
  add_common(baseline, common);
  std::string method, traceroutes_file, b_centroids_file, mesh_file, b_at_str, primary_file;
  baseline->add_option("--method", method, "gharaibeh | darwich | compare")->required();
  baseline->add_option("--traceroutes", traceroutes_file, "Traceroute CSV (gharaibeh)");
  baseline->add_option("--baseline-flags", traceroutes_file, "Baseline flags CSV (compare)");
  baseline->add_option("--centroids", b_centroids_file, "Country centroid CSV");
  baseline->add_option("--mesh", mesh_file, "Anchor mesh CSV (darwich)");
  baseline->add_option("--at", b_at_str, "Location lookup instant (ISO 8601)");
  baseline->add_option("--primary", primary_file, "violations.csv from detect (compare)");

  auto* simulate = app.add_subcommand("simulate", "Score the detector on a synthetic world");
  add_common(simulate, common);
  std::string scenario_file;
  simulate->add_option("--scenario", scenario_file, "Scenario JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (fetch->parsed()) {
      return cmd_fetch(common, campaign_file, fixture_dir, measurements_file, from_str, to_str,
                       api_base);
    }
    if (detect->parsed()) return cmd_detect(common, latest, at_str, guard_ms, centroids_file);
    if (history->parsed()) return cmd_history(common);
    if (feed->parsed()) return cmd_feed(common, stale_days);
    if (baseline->parsed()) {
      return cmd_baseline(common, method, traceroutes_file, b_centroids_file, mesh_file,
                          b_at_str, primary_file);
    }
    if (simulate->parsed()) return cmd_simulate(common, scenario_file);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

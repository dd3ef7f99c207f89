#include "soiverify/store.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace soiverify::store {

namespace fs = std::filesystem;
using ingest::LatencyObservation;

namespace {

std::string partition_name(const std::string& month) { return "obs-" + month + ".records"; }
std::string index_name(const std::string& month) { return "obs-" + month + ".index"; }

std::string format_record(const LatencyObservation& o) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%lld,%s,%s,%.6f,%lld",
                static_cast<long long>(o.probe_id), o.vp_id.c_str(),
                timeutil::format_iso8601(o.window_start).c_str(), o.min_rtt_ms,
                static_cast<long long>(o.sample_count));
  return buf;
}

std::optional<LatencyObservation> parse_record(const std::string& line) {
  std::istringstream ss(line);
  std::string probe_str, vp_id, ts_str, rtt_str, count_str;
  if (!std::getline(ss, probe_str, ',') || !std::getline(ss, vp_id, ',') ||
      !std::getline(ss, ts_str, ',') || !std::getline(ss, rtt_str, ',') ||
      !std::getline(ss, count_str)) {
    return std::nullopt;
  }
  auto ts = timeutil::parse_iso8601(ts_str);
  if (!ts) return std::nullopt;
  try {
    return LatencyObservation{vp_id, std::stoll(probe_str), *ts, std::stod(rtt_str),
                              std::stoll(count_str)};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<LatencyObservation> read_partition(const fs::path& file) {
  std::vector<LatencyObservation> out;
  std::ifstream in(file);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (auto rec = parse_record(line)) out.push_back(std::move(*rec));
  }
  return out;
}

void write_partition(const fs::path& dir, const std::string& month,
                     const std::vector<LatencyObservation>& records) {
  {
    std::ofstream out(dir / partition_name(month), std::ios::trunc);
    for (const auto& r : records) out << format_record(r) << '\n';
  }
  timeutil::UnixSeconds lo = 0, hi = 0;
  if (!records.empty()) {
    auto [mn, mx] = std::minmax_element(records.begin(), records.end(),
                                        [](const auto& a, const auto& b) {
                                          return a.window_start < b.window_start;
                                        });
    lo = mn->window_start;
    hi = mx->window_start;
  }
  std::ofstream idx(dir / index_name(month), std::ios::trunc);
  idx << "records=" << records.size() << '\n'
      << "window_min=" << timeutil::format_iso8601(lo) << '\n'
      << "window_max=" << timeutil::format_iso8601(hi) << '\n';
}

}  // namespace

ObservationStore::ObservationStore(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::int64_t ObservationStore::upsert(const std::vector<LatencyObservation>& observations) {
  std::map<std::string, std::vector<const LatencyObservation*>> by_month;
  for (const auto& o : observations) {
    by_month[timeutil::month_key(o.window_start)].push_back(&o);
  }
  std::int64_t changed = 0;
  for (const auto& [month, incoming] : by_month) {
    std::map<std::tuple<registry::ProbeId, std::string, timeutil::UnixSeconds>,
             LatencyObservation>
        merged;
    for (auto& rec : read_partition(dir_ / partition_name(month))) {
      merged.emplace(rec.key(), std::move(rec));
    }
    bool dirty = false;
    for (const LatencyObservation* o : incoming) {
      auto [it, inserted] = merged.try_emplace(o->key(), *o);
      if (inserted) {
        ++changed;
        dirty = true;
      } else if (o->min_rtt_ms < it->second.min_rtt_ms) {
        it->second = *o;
        ++changed;
        dirty = true;
      }
    }
    if (dirty) {
      std::vector<LatencyObservation> records;
      records.reserve(merged.size());
      for (auto& [key, rec] : merged) records.push_back(std::move(rec));
      write_partition(dir_, month, records);
    }
  }
  return changed;
}

std::vector<LatencyObservation> ObservationStore::load_all() const {
  std::vector<LatencyObservation> out;
  std::vector<fs::path> parts;
  if (fs::exists(dir_)) {
    for (const auto& entry : fs::directory_iterator(dir_)) {
      if (entry.path().extension() == ".records") parts.push_back(entry.path());
    }
  }
  std::sort(parts.begin(), parts.end());
  for (const auto& p : parts) {
    auto recs = read_partition(p);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.key() < b.key(); });
  return out;
}

std::vector<LatencyObservation> ObservationStore::load_window(timeutil::UnixSeconds from,
                                                              timeutil::UnixSeconds to) const {
  std::vector<LatencyObservation> out;
  for (auto& o : load_all()) {
    if (o.window_start >= from && o.window_start < to) out.push_back(std::move(o));
  }
  return out;
}

std::vector<timeutil::UnixSeconds> ObservationStore::window_starts() const {
  std::set<timeutil::UnixSeconds> starts;
  for (const auto& o : load_all()) starts.insert(o.window_start);
  return {starts.begin(), starts.end()};
}

StoreLock::StoreLock(const fs::path& dir) : lock_path_(dir / ".lock") {
  fs::create_directories(dir);
  if (fs::exists(lock_path_)) {
    throw std::runtime_error("store is locked by another command: " + lock_path_.string());
  }
  std::ofstream(lock_path_) << "locked\n";
}

StoreLock::~StoreLock() {
  std::error_code ec;
  fs::remove(lock_path_, ec);
}

}  // namespace soiverify::store

#include "soiverify/atlas_client.hpp"

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

namespace soiverify::atlas {

using nlohmann::json;

HttpTransport::HttpTransport(std::string api_key) : api_key_(std::move(api_key)) {}

Transport::Response HttpTransport::get(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) return {0, "bad url"};
  auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Key " + api_key_);
  auto res = client.Get(path, headers);
  if (!res) return {0, ""};
  return {res->status, res->body};
}

std::vector<MeasurementMapping> load_measurement_config(std::istream& in) {
  const json doc = json::parse(in);
  std::vector<MeasurementMapping> out;
  for (const auto& entry : doc) {
    out.push_back({entry.at("vp_id").get<std::string>(),
                   entry.at("measurement_id").get<std::int64_t>()});
  }
  return out;
}

AtlasClient::AtlasClient(Transport& transport, FetchOptions options)
    : transport_(transport), options_(std::move(options)) {}

namespace {

struct PageParse {
  std::vector<json> results;
  std::optional<std::string> next;
};

PageParse parse_page(const std::string& body) {
  PageParse out;
  const json doc = json::parse(body);
  if (doc.is_array()) {
    out.results.assign(doc.begin(), doc.end());
  } else if (doc.is_object() && doc.contains("results")) {
    out.results.assign(doc["results"].begin(), doc["results"].end());
    if (doc.contains("next") && doc["next"].is_string()) out.next = doc["next"].get<std::string>();
  } else {
    throw std::runtime_error("unexpected response shape");
  }
  return out;
}

int weekday_of(timeutil::UnixSeconds t) {
  // 1970-01-01 was a Thursday; index days modulo 7.
  std::int64_t days = t / timeutil::kSecondsPerDay;
  if (t % timeutil::kSecondsPerDay < 0) --days;
  return static_cast<int>(((days % 7) + 7) % 7);
}

}  // namespace

FetchResult AtlasClient::fetch_builtin_measurements(
    const std::vector<MeasurementMapping>& mapping, const std::set<registry::ProbeId>& probe_ids,
    timeutil::UnixSeconds start, timeutil::UnixSeconds stop) {
  FetchResult result;
  if (probe_ids.empty() || mapping.empty()) return result;

  // One task per (measurement, probe chunk); each task holds one request in
  // flight at a time, workers bound total concurrency.
  struct Task {
    std::string vp_id;
    std::string first_url;
  };
  std::vector<Task> tasks;
  std::vector<registry::ProbeId> ids(probe_ids.begin(), probe_ids.end());
  for (const auto& m : mapping) {
    for (std::size_t i = 0; i < ids.size(); i += options_.probe_ids_per_request) {
      std::ostringstream url;
      url << options_.api_base << "/measurements/" << m.measurement_id
          << "/results?start=" << start << "&stop=" << stop << "&probe_ids=";
      const std::size_t end = std::min(ids.size(), i + options_.probe_ids_per_request);
      for (std::size_t j = i; j < end; ++j) {
        if (j > i) url << ',';
        url << ids[j];
      }
      tasks.push_back({m.vp_id, url.str()});
    }
  }

  const int cadence_weekday = weekday_of(start);
  std::mutex mu;
  std::size_t next_task = 0;
  std::exception_ptr failure;

  auto fetch_url = [&](const std::string& url) -> std::string {
    int backoff = options_.backoff_initial_ms;
    for (int attempt = 0;; ++attempt) {
      Transport::Response res;
      {
        std::lock_guard<std::mutex> count_guard(mu);
        ++result.requests_made;
      }
      res = transport_.get(url);
      if (res.status >= 200 && res.status < 300) return res.body;
      if (res.status >= 400 && res.status < 500) {
        throw std::runtime_error("atlas API returned " + std::to_string(res.status) + " for " +
                                 url);
      }
      if (attempt >= options_.max_retries) {
        throw std::runtime_error("atlas API request failed after " +
                                 std::to_string(attempt + 1) + " attempts: " + url);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff = std::min(backoff * 2, 10'000);
    }
  };

  auto worker = [&] {
    for (;;) {
      Task task;
      {
        std::lock_guard<std::mutex> guard(mu);
        if (failure || next_task >= tasks.size()) return;
        task = tasks[next_task++];
      }
      try {
        std::vector<ingest::Sample> local;
        std::int64_t local_malformed = 0;
        std::optional<std::string> url = task.first_url;
        while (url) {
          PageParse page = parse_page(fetch_url(*url));
          for (const json& doc : page.results) {
            try {
              if (!doc.contains("min") || doc["min"].is_null()) continue;
              const double min_rtt = doc["min"].get<double>();
              if (min_rtt <= 0.0) continue;  // failed ping encodes as -1
              const auto ts = doc.at("timestamp").get<timeutil::UnixSeconds>();
              if (ts < start || ts >= stop) continue;
              const int hour = static_cast<int>((ts / 3600) % 24);
              if (!options_.sample_hours.empty() &&
                  std::find(options_.sample_hours.begin(), options_.sample_hours.end(), hour) ==
                      options_.sample_hours.end()) {
                continue;
              }
              if (options_.weekly_cadence && weekday_of(ts) != cadence_weekday) continue;
              local.push_back({task.vp_id, doc.at("prb_id").get<registry::ProbeId>(), ts,
                               min_rtt});
            } catch (const std::exception&) {
              ++local_malformed;
            }
          }
          url = page.next;
        }
        std::lock_guard<std::mutex> guard(mu);
        result.samples.insert(result.samples.end(), local.begin(), local.end());
        result.malformed_docs += local_malformed;
      } catch (...) {
        std::lock_guard<std::mutex> guard(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int n_workers = std::max(1, std::min<int>(options_.max_in_flight,
                                                  static_cast<int>(tasks.size())));
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  std::sort(result.samples.begin(), result.samples.end(), [](const auto& a, const auto& b) {
    return std::tie(a.probe_id, a.vp_id, a.timestamp) < std::tie(b.probe_id, b.vp_id, b.timestamp);
  });
  return result;
}

}  // namespace soiverify::atlas

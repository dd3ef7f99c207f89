#include <atomic>
#include <chrono>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "soiverify/atlas_client.hpp"

using namespace soiverify;
using nlohmann::json;

namespace {

timeutil::UnixSeconds ts(const char* s) { return *timeutil::parse_iso8601(s); }

json result_doc(registry::ProbeId prb, timeutil::UnixSeconds t, double min_rtt) {
  return json{{"prb_id", prb}, {"timestamp", t}, {"min", min_rtt}};
}

/// Canned-response transport that tracks request concurrency.
class FakeTransport : public atlas::Transport {
 public:
  std::map<std::string, std::vector<Response>> routes;  // URL -> response sequence
  std::atomic<int> in_flight{0};
  std::atomic<int> max_in_flight{0};
  std::atomic<int> total_requests{0};

  Response get(const std::string& url) override {
    const int now = ++in_flight;
    int prev = max_in_flight.load();
    while (now > prev && !max_in_flight.compare_exchange_weak(prev, now)) {}
    ++total_requests;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    Response res{404, "no route"};
    {
      std::lock_guard<std::mutex> guard(mu_);
      auto it = routes.find(url);
      if (it != routes.end() && !it->second.empty()) {
        res = it->second.front();
        if (it->second.size() > 1) it->second.erase(it->second.begin());
      }
    }
    --in_flight;
    return res;
  }

 private:
  std::mutex mu_;
};

std::string results_url(const std::string& base, std::int64_t msm, timeutil::UnixSeconds start,
                        timeutil::UnixSeconds stop, const std::string& probes) {
  std::ostringstream url;
  url << base << "/measurements/" << msm << "/results?start=" << start << "&stop=" << stop
      << "&probe_ids=" << probes;
  return url.str();
}

}  // namespace

TEST_CASE("empty probe set makes zero requests") {
  FakeTransport transport;
  atlas::AtlasClient client(transport, {});
  auto res = client.fetch_builtin_measurements({{"ripe-singapore", 1001}}, {}, 0, 100);
  CHECK(res.samples.empty());
  CHECK(transport.total_requests == 0);
}

TEST_CASE("one probe-week fixture yields three samples per sample day") {
  const timeutil::UnixSeconds start = ts("2024-05-06");  // a Monday
  const timeutil::UnixSeconds stop = start + timeutil::kSecondsPerWeek;

  json page = json::array();
  // the cadence weekday (Monday) at 6h, 12h, 18h: kept
  for (int h : {6, 12, 18}) page.push_back(result_doc(822, start + h * 3600, 12.5));
  // other hours on the cadence day: filtered
  page.push_back(result_doc(822, start + 9 * 3600, 12.5));
  // right hours on another weekday: filtered
  for (int h : {6, 12, 18})
    page.push_back(result_doc(822, start + timeutil::kSecondsPerDay * 2 + h * 3600, 12.5));
  // failed ping encodes min as -1: dropped
  page.push_back(result_doc(822, start + 6 * 3600, -1.0));

  FakeTransport transport;
  atlas::FetchOptions opt;
  opt.api_base = "http://fake/api/v2";
  transport.routes[results_url(opt.api_base, 1001, start, stop, "822")] = {{200, page.dump()}};

  atlas::AtlasClient client(transport, opt);
  auto res = client.fetch_builtin_measurements({{"ripe-singapore", 1001}}, {822}, start, stop);
  CHECK(res.samples.size() == 3);
  for (const auto& s : res.samples) {
    CHECK(s.vp_id == "ripe-singapore");
    CHECK(s.probe_id == 822);
    CHECK(s.rtt_ms == 12.5);
  }
}

TEST_CASE("pagination follows the next link") {
  const timeutil::UnixSeconds start = ts("2024-05-06");
  const timeutil::UnixSeconds stop = start + timeutil::kSecondsPerWeek;
  FakeTransport transport;
  atlas::FetchOptions opt;
  opt.api_base = "http://fake/api/v2";

  const std::string first = results_url(opt.api_base, 1001, start, stop, "822");
  const std::string second = first + "&page=2";
  transport.routes[first] = {
      {200, json{{"results", json::array({result_doc(822, start + 6 * 3600, 10.0)})},
                 {"next", second}}
                .dump()}};
  transport.routes[second] = {
      {200, json{{"results", json::array({result_doc(822, start + 12 * 3600, 11.0)})},
                 {"next", nullptr}}
                .dump()}};

  atlas::AtlasClient client(transport, opt);
  auto res = client.fetch_builtin_measurements({{"ripe-singapore", 1001}}, {822}, start, stop);
  CHECK(res.samples.size() == 2);
  CHECK(transport.total_requests == 2);
}

TEST_CASE("transient 5xx retries then succeeds") {
  const timeutil::UnixSeconds start = ts("2024-05-06");
  const timeutil::UnixSeconds stop = start + timeutil::kSecondsPerWeek;
  FakeTransport transport;
  atlas::FetchOptions opt;
  opt.api_base = "http://fake/api/v2";
  opt.backoff_initial_ms = 1;

  const std::string url = results_url(opt.api_base, 1001, start, stop, "822");
  transport.routes[url] = {
      {503, ""}, {0, ""}, {200, json::array({result_doc(822, start + 6 * 3600, 10.0)}).dump()}};

  atlas::AtlasClient client(transport, opt);
  auto res = client.fetch_builtin_measurements({{"ripe-singapore", 1001}}, {822}, start, stop);
  CHECK(res.samples.size() == 1);
  CHECK(transport.total_requests == 3);
}

TEST_CASE("4xx fails fast with endpoint context") {
  const timeutil::UnixSeconds start = ts("2024-05-06");
  FakeTransport transport;  // unrouted URLs return 404
  atlas::FetchOptions opt;
  opt.api_base = "http://fake/api/v2";
  atlas::AtlasClient client(transport, opt);
  CHECK_THROWS_WITH_AS(
      client.fetch_builtin_measurements({{"ripe-singapore", 1001}}, {822}, start,
                                        start + timeutil::kSecondsPerWeek),
      doctest::Contains("404"), std::runtime_error);
  CHECK(transport.total_requests == 1);
}

TEST_CASE("malformed result documents are skipped and tallied") {
  const timeutil::UnixSeconds start = ts("2024-05-06");
  const timeutil::UnixSeconds stop = start + timeutil::kSecondsPerWeek;
  FakeTransport transport;
  atlas::FetchOptions opt;
  opt.api_base = "http://fake/api/v2";
  json page = json::array({result_doc(822, start + 6 * 3600, 10.0),
                           json{{"min", 5.0}, {"timestamp", "not-a-number"}, {"prb_id", 822}}});
  transport.routes[results_url(opt.api_base, 1001, start, stop, "822")] = {{200, page.dump()}};
  atlas::AtlasClient client(transport, opt);
  auto res = client.fetch_builtin_measurements({{"ripe-singapore", 1001}}, {822}, start, stop);
  CHECK(res.samples.size() == 1);
  CHECK(res.malformed_docs == 1);
}

TEST_CASE("request concurrency never exceeds max_in_flight") {
  const timeutil::UnixSeconds start = ts("2024-05-06");
  const timeutil::UnixSeconds stop = start + timeutil::kSecondsPerWeek;
  FakeTransport transport;
  atlas::FetchOptions opt;
  opt.api_base = "http://fake/api/v2";
  opt.max_in_flight = 4;
  opt.probe_ids_per_request = 1;

  std::set<registry::ProbeId> probes;
  std::vector<atlas::MeasurementMapping> mapping = {{"ripe-singapore", 1001},
                                                    {"ripe-fremont", 1002}};
  for (registry::ProbeId p = 1; p <= 16; ++p) {
    probes.insert(p);
    for (const auto& m : mapping) {
      transport.routes[results_url(opt.api_base, m.measurement_id, start, stop,
                                   std::to_string(p))] = {
          {200, json::array({result_doc(p, start + 6 * 3600, 10.0)}).dump()}};
    }
  }

  atlas::AtlasClient client(transport, opt);
  auto res = client.fetch_builtin_measurements(mapping, probes, start, stop);
  CHECK(res.samples.size() == 32);
  CHECK(transport.max_in_flight.load() <= 4);
  CHECK(transport.max_in_flight.load() >= 2);  // the pool actually ran in parallel
}

TEST_CASE("measurement mapping config parses") {
  std::istringstream in(R"([{"vp_id":"ripe-singapore","measurement_id":1001}])");
  auto mapping = atlas::load_measurement_config(in);
  REQUIRE(mapping.size() == 1);
  CHECK(mapping[0].vp_id == "ripe-singapore");
  CHECK(mapping[0].measurement_id == 1001);
}

#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "soiverify/ingest.hpp"

namespace soiverify::atlas {

/// Minimal HTTP surface so tests can substitute a recorded transport.
class Transport {
 public:
  struct Response {
    int status = 0;  // 0 = connection failure / timeout
    std::string body;
  };
  virtual ~Transport() = default;
  virtual Response get(const std::string& url) = 0;
};

/// Real transport over cpp-httplib. Splits the URL into host and path.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(std::string api_key = {});
  Response get(const std::string& url) override;

 private:
  std::string api_key_;
};

/// Which built-in measurement id feeds which central-server vantage point.
/// Ships as a user-verifiable config file.
struct MeasurementMapping {
  std::string vp_id;
  std::int64_t measurement_id = 0;
};

/// Parses the mapping config: a JSON array of {vp_id, measurement_id}.
std::vector<MeasurementMapping> load_measurement_config(std::istream& in);

struct FetchOptions {
  std::string api_base = "https://atlas.ripe.net/api/v2";
  int max_in_flight = 4;
  int max_retries = 3;
  int backoff_initial_ms = 100;
  std::size_t probe_ids_per_request = 500;
  std::vector<int> sample_hours = {6, 12, 18};  // UTC times-of-day to keep
  bool weekly_cadence = true;                   // keep only the start day's weekday
};

struct FetchResult {
  std::vector<ingest::Sample> samples;
  std::int64_t malformed_docs = 0;
  std::int64_t requests_made = 0;
};

/// Client for the built-in ping measurements toward the RIPE central servers.
/// Paginates transparently, retries transient failures with bounded
/// exponential backoff, and keeps at most max_in_flight requests active.
class AtlasClient {
 public:
  AtlasClient(Transport& transport, FetchOptions options);

  FetchResult fetch_builtin_measurements(const std::vector<MeasurementMapping>& mapping,
                                         const std::set<registry::ProbeId>& probe_ids,
                                         timeutil::UnixSeconds start,
                                         timeutil::UnixSeconds stop);

 private:
  Transport& transport_;
  FetchOptions options_;
};

}  // namespace soiverify::atlas

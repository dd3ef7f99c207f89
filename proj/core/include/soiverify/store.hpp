#pragma once

#include <filesystem>
#include <vector>

#include "soiverify/ingest.hpp"

namespace soiverify::store {

/// Append-only observation store: sorted newline-delimited record files
/// partitioned by month of window_start, one index file per partition.
/// Upserts are keyed by (probe_id, vp_id, window_start); re-ingesting the
/// same data is a no-op.
class ObservationStore {
 public:
  explicit ObservationStore(std::filesystem::path dir);

  /// Merges observations into their partitions. On a key collision the entry
  /// with the smaller min_rtt_ms wins. Returns the number of records that
  /// were inserted or replaced.
  std::int64_t upsert(const std::vector<ingest::LatencyObservation>& observations);

  /// All records across partitions, sorted by (probe_id, vp_id, window_start).
  std::vector<ingest::LatencyObservation> load_all() const;

  std::vector<ingest::LatencyObservation> load_window(timeutil::UnixSeconds from,
                                                      timeutil::UnixSeconds to) const;

  /// Distinct window_start values present, ascending.
  std::vector<timeutil::UnixSeconds> window_starts() const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

/// Advisory per-directory lock; throws if the store is already locked.
class StoreLock {
 public:
  explicit StoreLock(const std::filesystem::path& dir);
  ~StoreLock();
  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;

 private:
  std::filesystem::path lock_path_;
};

}  // namespace soiverify::store

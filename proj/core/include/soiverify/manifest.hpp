#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "soiverify/time_util.hpp"

namespace soiverify::manifest {

inline constexpr const char* kToolVersion = "0.1.0";

/// 64-bit FNV-1a over the file contents, hex-encoded.
std::string file_digest(const std::filesystem::path& file);

/// Reproducibility sidecar written next to every command's outputs: the
/// command, its config snapshot, and digests of all inputs and outputs.
/// Identical inputs and config must reproduce identical output digests.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> input_digests;
  std::map<std::string, std::string> output_digests;
  std::string tool_version = kToolVersion;
  timeutil::UnixSeconds started_at = 0;
  timeutil::UnixSeconds finished_at = 0;

  void add_input(const std::filesystem::path& file);
  void add_output(const std::filesystem::path& file);
  void write(const std::filesystem::path& file) const;
};

}  // namespace soiverify::manifest

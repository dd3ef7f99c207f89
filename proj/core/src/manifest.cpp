#include "soiverify/manifest.hpp"

#include <fstream>

#include "json.hpp"

namespace soiverify::manifest {

std::string file_digest(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

void RunManifest::add_input(const std::filesystem::path& file) {
  input_digests[file.filename().string()] = file_digest(file);
}

void RunManifest::add_output(const std::filesystem::path& file) {
  output_digests[file.filename().string()] = file_digest(file);
}

void RunManifest::write(const std::filesystem::path& file) const {
  nlohmann::json doc;
  doc["command"] = command;
  doc["config"] = config;
  doc["inputs"] = input_digests;
  doc["outputs"] = output_digests;
  doc["tool_version"] = tool_version;
  doc["started_at"] = timeutil::format_iso8601(started_at);
  doc["finished_at"] = timeutil::format_iso8601(finished_at);
  std::ofstream out(file, std::ios::trunc);
  out << doc.dump(2) << '\n';
}

}  // namespace soiverify::manifest

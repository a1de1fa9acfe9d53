#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace pabs {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string_view tool_version();

/// Provenance record written next to every output file.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::filesystem::path>> inputs;  // role, path
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::pair<std::string, double>> timings;  // phase, seconds

  nlohmann::json to_json() const;
  /// Writes `<output>.manifest.json`.
  void write_sidecar(const std::filesystem::path& output) const;
};

class PhaseTimer {
 public:
  explicit PhaseTimer(RunManifest& m) : manifest_(m), start_(std::chrono::steady_clock::now()) {}
  void lap(const std::string& phase) {
    const auto now = std::chrono::steady_clock::now();
    manifest_.timings.emplace_back(phase, std::chrono::duration<double>(now - start_).count());
    start_ = now;
  }

 private:
  RunManifest& manifest_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace pabs

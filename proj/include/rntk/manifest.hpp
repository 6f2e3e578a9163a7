#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rntk/io.hpp"
#include "rntk/version.hpp"

namespace rntk {

/// Record of one CLI run: the command, every resolved configuration value,
/// input/output paths, seed, toolkit version, and wall-clock duration.
/// A manifest is written next to each run's primary output.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::int64_t seed = 0;
  std::string version = kVersion;
  double duration_ms = 0.0;
};

inline std::filesystem::path manifest_path_for(const std::filesystem::path& primary_output) {
  auto p = primary_output;
  p += ".manifest.json";
  return p;
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  nlohmann::json j;
  j["command"] = m.command;
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["duration_ms"] = m.duration_ms;
  auto out = detail::open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

/// Simple wall-clock stopwatch for manifest durations.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace rntk

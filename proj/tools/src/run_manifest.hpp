#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dare::tools {

/// Provenance record written as run_manifest.json next to a command's outputs.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> args);

  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_config(const std::string& role, const std::string& path) { configs_[role] = path; }
  void add_output(const std::filesystem::path& path) { outputs_.push_back(path.string()); }

  /// Stamps the finish time and writes `dir`/run_manifest.json.
  std::filesystem::path write(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  std::vector<std::string> args_;
  std::optional<std::uint64_t> seed_;
  std::map<std::string, std::string> configs_;
  std::vector<std::string> outputs_;
  std::chrono::system_clock::time_point started_;
};

}  // namespace dare::tools

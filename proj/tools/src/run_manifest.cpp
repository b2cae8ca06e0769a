#include "run_manifest.hpp"

#include <ctime>
#include <fstream>

#include "dare/error.hpp"
#include "json.hpp"

namespace dare::tools {

namespace {

std::string iso8601(std::chrono::system_clock::time_point t) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm utc{};
  gmtime_r(&secs, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

}  // namespace

RunManifest::RunManifest(std::string command, std::vector<std::string> args)
    : command_(std::move(command)), args_(std::move(args)), started_(std::chrono::system_clock::now()) {}

std::filesystem::path RunManifest::write(const std::filesystem::path& dir) const {
  nlohmann::json doc{{"command", command_},
                     {"args", args_},
                     {"tool_version", DARE_VERSION},
                     {"config_paths", configs_},
                     {"outputs", outputs_},
                     {"started_at", iso8601(started_)},
                     {"finished_at", iso8601(std::chrono::system_clock::now())}};
  doc["seed"] = seed_ ? nlohmann::json(*seed_) : nlohmann::json(nullptr);
  std::filesystem::create_directories(dir);
  const auto path = dir / "run_manifest.json";
  std::ofstream out(path);
  out << doc.dump(2) << '\n';
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  return path;
}

}  // namespace dare::tools

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dare/error.hpp"

namespace dare::detail {

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

inline nlohmann::json parse_json(std::string_view text, ErrorCode code, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(code, what + ": " + e.what());
  }
}

template <typename T>
T require(const nlohmann::json& obj, const char* key, ErrorCode code, const std::string& what) {
  if (!obj.is_object() || !obj.contains(key)) fail(code, what + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(code, what + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace dare::detail

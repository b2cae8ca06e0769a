#include <fstream>
#include <sstream>
#include <string>

#include "dare/dataio.hpp"
#include "dare/error.hpp"

namespace dare {
namespace {

std::vector<std::string> split(const std::string& line, std::size_t max_fields) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (fields.size() + 1 < max_fields) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) break;
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  fields.push_back(line.substr(start));
  return fields;
}

std::string at_line(std::size_t line) { return "line " + std::to_string(line); }

std::size_t parse_label(const std::string& text, std::size_t line) {
  const auto idx = label_index(text);
  if (!idx) fail(ErrorCode::UnknownLabel, at_line(line) + ": '" + text + "'");
  return *idx;
}

}  // namespace

std::map<std::size_t, std::size_t> Manifest::tallies() const {
  std::map<std::size_t, std::size_t> counts;
  for (const auto& s : samples) ++counts[s.label];
  return counts;
}

Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir, bool check_files) {
  Manifest manifest;
  std::string line;
  std::size_t number = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.rfind("#count,", 0) == 0) {
        const auto fields = split(line, 3);
        if (fields.size() != 3) fail(ErrorCode::ParseError, at_line(number) + ": malformed #count");
        const std::size_t label = parse_label(fields[1], number);
        try {
          std::size_t used = 0;
          const unsigned long long n = std::stoull(fields[2], &used);
          if (used != fields[2].size()) throw std::invalid_argument("trailing");
          manifest.declared_counts[label] = static_cast<std::size_t>(n);
        } catch (const std::exception&) {
          fail(ErrorCode::ParseError, at_line(number) + ": bad count '" + fields[2] + "'");
        }
      }
      continue;
    }
    if (!saw_header) {
      if (line != "left,right,label,location") {
        fail(ErrorCode::ParseError, at_line(number) + ": expected header left,right,label,location");
      }
      saw_header = true;
      continue;
    }
    const auto fields = split(line, 4);
    if (fields.size() < 3 || fields[0].empty() || fields[1].empty()) {
      fail(ErrorCode::ParseError, at_line(number) + ": expected left,right,label[,location]");
    }
    StereoSample sample;
    sample.left = base_dir / fields[0];
    sample.right = base_dir / fields[1];
    sample.label = parse_label(fields[2], number);
    sample.location = fields.size() > 3 ? fields[3] : "";
    if (check_files) {
      for (const auto& p : {sample.left, sample.right}) {
        if (!std::filesystem::exists(p)) fail(ErrorCode::IoError, at_line(number) + ": missing image " + p.string());
      }
    }
    manifest.samples.push_back(std::move(sample));
  }
  if (!saw_header) fail(ErrorCode::ParseError, "manifest has no header line");

  const auto counts = manifest.tallies();
  for (const auto& [label, declared] : manifest.declared_counts) {
    const auto it = counts.find(label);
    const std::size_t actual = it == counts.end() ? 0 : it->second;
    if (actual != declared) {
      fail(ErrorCode::CountMismatch, "label '" + std::string(taxonomy()[label]) + "' declared " +
                                         std::to_string(declared) + ", found " + std::to_string(actual));
    }
  }
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& path, bool check_files) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path(), check_files);
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  const auto base = path.parent_path();
  const auto rel = [&](const std::filesystem::path& p) {
    return base.empty() ? p.generic_string() : p.lexically_relative(base).generic_string();
  };
  for (const auto& [label, n] : manifest.declared_counts) {
    out << "#count," << taxonomy()[label] << ',' << n << '\n';
  }
  out << "left,right,label,location\n";
  for (const auto& s : manifest.samples) {
    out << rel(s.left) << ',' << rel(s.right) << ',' << taxonomy()[s.label] << ','
        << s.location << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace dare

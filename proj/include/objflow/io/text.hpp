#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "objflow/error.hpp"

namespace objflow::io {

/// Shortest round-trip decimal form; "nan" for non-finite values.
inline std::string format_double(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "nan" || s == "NaN" || s == "-nan") return std::nan("");
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::kValidation, where + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

inline long parse_int(std::string_view s, const std::string& where) {
  const double v = parse_double(s, where);
  if (!std::isfinite(v) || v != std::floor(v)) {
    throw Error(ErrorKind::kValidation, where + ": expected an integer, got '" + std::string(s) + "'");
  }
  return static_cast<long>(v);
}

inline bool parse_bool(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw Error(ErrorKind::kValidation, where + ": expected 0/1, got '" + std::string(s) + "'");
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Rows of a CSV file whose header must equal `expected_header` (whitespace-trimmed).
inline std::vector<std::vector<std::string>> read_csv(const std::string& path, std::string_view expected_header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kValidation, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::string header;
  for (char c : line)
    if (c != ' ') header.push_back(c);
  if (header != expected_header) {
    throw Error(ErrorKind::kValidation, path + ": header '" + line + "' (expected '" + std::string(expected_header) + "')");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> row;
    for (auto f : split_csv_line(line)) row.emplace_back(f);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kValidation, path + ": " + e.what());
  }
}

/// Write through a temporary sibling and rename, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error(ErrorKind::kIo, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

/// Resolve `p` against `base_dir` unless it is absolute.
inline std::string resolve(const std::filesystem::path& base_dir, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path.string() : (base_dir / path).lexically_normal().string();
}

}  // namespace objflow::io

#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "qpi/errors.hpp"

namespace qpi::detail {

// %.17g round-trips doubles exactly and is locale-independent here because
// the process never leaves the "C" locale.
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline bool starts_with(const std::string& s, const std::string& prefix) {
  return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

inline double parse_double(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    fail_io("expected a number for " + what + ", got '" + s + "'");
  }
  if (pos != t.size()) fail_io("trailing junk in " + what + ": '" + s + "'");
  return v;
}

inline long long parse_ll(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(t, &pos);
  } catch (const std::exception&) {
    fail_io("expected an integer for " + what + ", got '" + s + "'");
  }
  if (pos != t.size()) fail_io("trailing junk in " + what + ": '" + s + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  if (!t.empty() && t[0] == '-') fail_io(what + " must be nonnegative: '" + s + "'");
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(t, &pos);
  } catch (const std::exception&) {
    fail_io("expected an unsigned integer for " + what + ", got '" + s + "'");
  }
  if (pos != t.size()) fail_io("trailing junk in " + what + ": '" + s + "'");
  return v;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) fail_io("write failed for " + path);
}

// "key: value" field accessor; fields appear in a fixed order in our files.
inline std::string expect_field(const std::vector<std::string>& lines,
                                std::size_t& idx, const std::string& key,
                                const std::string& path) {
  if (idx >= lines.size())
    fail_io(path + ": missing field '" + key + "' (truncated file?)");
  const std::string& line = lines[idx];
  const std::string prefix = key + ":";
  if (!starts_with(line, prefix))
    fail_io(path + ": expected field '" + key + "', got '" + line + "'");
  ++idx;
  return trim(line.substr(prefix.size()));
}

// Bracketed comma-separated list: [a, b, c]. Empty list is [].
inline std::vector<std::string> parse_list(const std::string& s,
                                           const std::string& what) {
  const std::string t = trim(s);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    fail_io(what + " must be a bracketed list, got '" + s + "'");
  const std::string inner = trim(t.substr(1, t.size() - 2));
  if (inner.empty()) return {};
  std::vector<std::string> out;
  for (const auto& piece : split(inner, ',')) out.push_back(trim(piece));
  return out;
}

inline std::string join_list(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k) out += ", ";
    out += items[k];
  }
  out += "]";
  return out;
}

}  // namespace qpi::detail

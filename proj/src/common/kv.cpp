// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "common/kv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "common/errors.hpp"

namespace dg {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view want) {
  throw UsageError("config key '" + std::string(key) + "': expected " + std::string(want) + ", got '" +
                   std::string(value) + "'");
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text, std::string_view origin) {
  KeyValues out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(std::string(origin) + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError(std::string(origin) + ":" + std::to_string(line_no) + ": empty key");
    out.entries.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return out;
}

KeyValues KeyValues::read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

double kv_double(std::string_view key, std::string_view value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v)) bad(key, value, "a number");
  return v;
}

std::size_t kv_size(std::string_view key, std::string_view value) {
  return static_cast<std::size_t>(kv_u64(key, value));
}

std::uint64_t kv_u64(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad(key, value, "a non-negative integer");
  return v;
}

bool kv_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "off" || value == "no") return false;
  bad(key, value, "a boolean");
}

std::string kv_format(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace dg

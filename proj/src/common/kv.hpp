// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dg {

// Ordered `key = value` entries. Blank lines and text after '#' are ignored.
struct KeyValues {
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
  };
  std::vector<Entry> entries;

  static KeyValues parse(std::string_view text, std::string_view origin = "<text>");
  static KeyValues read_file(const std::filesystem::path& path);
};

// Typed value parsing; failures throw UsageError naming the key.
double kv_double(std::string_view key, std::string_view value);
std::size_t kv_size(std::string_view key, std::string_view value);
std::uint64_t kv_u64(std::string_view key, std::string_view value);
bool kv_bool(std::string_view key, std::string_view value);

// Shortest text that reads back to the same double.
std::string kv_format(double value);

}  // namespace dg

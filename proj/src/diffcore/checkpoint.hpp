// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "diffcore/tensor.hpp"

namespace dg {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Binary parameter archive, little-endian (see docs/formats.md):
//   "DGCKPT01" | u32 count | count x { u32 name_len | name | u32 rank |
//   rank x u64 extent | numel x f64 }
// A sibling text manifest "<path>.manifest" holds key=value metadata.
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors,
                     const std::map<std::string, std::string>& manifest);

struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::map<std::string, std::string> manifest;

  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint);

}  // namespace dg

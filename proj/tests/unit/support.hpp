// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "data/synth.hpp"
#include "diffcore/tensor.hpp"
#include "model/config.hpp"
#include "model/inputs.hpp"

namespace dg::test {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                            bool grad = true) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = d(rng);
  return Tensor::from(std::move(shape), std::move(v), grad);
}

// Small but complete dual-glance configuration.
inline ModelConfig tiny_config() {
  ModelConfig c;
  c.patch_size = 8;
  c.pair_backbone = "3p,4";
  c.union_backbone = "3p,4";
  c.context_backbone = "3p,4";
  c.k = 6;
  c.bbox_hidden = 4;
  c.context_size = 16;
  return c;
}

inline SyntheticData tiny_synth(std::size_t n_train, std::size_t n_test, std::uint64_t seed = 5) {
  return synth_generate(SyntheticSceneSpec{}, n_train, n_test, seed);
}

inline std::vector<const PreparedSample*> pointers(const std::vector<PreparedSample>& v) {
  std::vector<const PreparedSample*> out;
  for (const auto& s : v) out.push_back(&s);
  return out;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("dg_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace dg::test

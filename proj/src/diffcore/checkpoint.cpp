// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

#include "diffcore/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "common/errors.hpp"

namespace dg {
namespace {

constexpr char kMagic[8] = {'D', 'G', 'C', 'K', 'P', 'T', '0', '1'};

template <class U>
void put_le(std::ostream& os, U v) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(bytes, sizeof(U));
}

template <class U>
U get_le(std::istream& is, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw IoError("checkpoint truncated: " + path.string());
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

std::filesystem::path manifest_path(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p += ".manifest";
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors,
                     const std::map<std::string, std::string>& manifest) {
  {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint: " + path.string());
    os.write(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
      put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
      for (auto e : t.shape()) put_le<std::uint64_t>(os, e);
      for (double v : t.values()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
    }
    if (!os) throw IoError("checkpoint write failed: " + path.string());
  }
  std::ofstream ms(manifest_path(path), std::ios::trunc);
  if (!ms) throw IoError("cannot write manifest: " + manifest_path(path).string());
  for (const auto& [k, v] : manifest) ms << k << '=' << v << '\n';
}

const Tensor& Checkpoint::at(const std::string& name) const {
  for (const auto& nt : tensors)
    if (nt.name == name) return nt.tensor;
  throw DataError("checkpoint has no tensor named '" + name + "'");
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& nt : tensors)
    if (nt.name == name) return true;
  return false;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  char magic[sizeof(kMagic)];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a checkpoint (bad magic): " + path.string());
  }
  Checkpoint ck;
  const auto count = get_le<std::uint32_t>(is, path);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint32_t>(is, path);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw IoError("checkpoint truncated: " + path.string());
    const auto rank = get_le<std::uint32_t>(is, path);
    Shape shape(rank);
    for (auto& e : shape) e = static_cast<std::size_t>(get_le<std::uint64_t>(is, path));
    std::vector<double> values(shape_numel(shape));
    for (auto& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(is, path));
    ck.tensors.push_back({std::move(name), Tensor::from(std::move(shape), std::move(values))});
  }
  std::ifstream ms(manifest_path(path));
  std::string line;
  while (std::getline(ms, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    ck.manifest[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return ck;
}

}  // namespace dg

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "relgate/core/tensor.hpp"

namespace relgate {

/// One tensor record in a checkpoint file.
struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> data;

  bool operator==(const NamedTensor&) const = default;
};

inline constexpr char kCheckpointMagic[4] = {'R', 'G', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout, all integers little-endian:
//   "RGT1" | version u32 | record*
//   record = name_len u32 | name bytes (UTF-8) | rank u32 | dims u64[rank] | f64[prod(dims)]
// Records run until end of file.
std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace relgate

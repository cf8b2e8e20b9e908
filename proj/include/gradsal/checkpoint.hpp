#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gradsal/nn.hpp"

namespace gradsal {

// Binary network checkpoint. Every integer and float is little-endian.
//
//   magic        8 bytes  "GRADSAL\x1a"
//   version      u32      kCheckpointVersion
//   num_classes  u32
//   input shape  3 x u32  C, H, W
//   layer count  u32
//   layers       per layer: u8 kind, then
//                  0 Conv2D    u32 in, out, kernel, stride, pad
//                  1 ReLU      -
//                  2 MaxPool2D u32 window
//                  3 Flatten   -
//                  4 Dense     u32 in, out
//   param count  u64      number of f64 values that follow
//   params       f64[]    weight then bias of each Conv2D/Dense in layer order
//   class names  u32 count, then per name u32 byte length + UTF-8 bytes
//   checksum     u64      FNV-1a 64 over every preceding byte
inline constexpr char kCheckpointMagic[8] = {'G', 'R', 'A', 'D', 'S', 'A', 'L', '\x1a'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Network& net);
// Throws DataError on bad magic, version mismatch, truncation, checksum
// failure or an inconsistent topology.
Network decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

}  // namespace gradsal

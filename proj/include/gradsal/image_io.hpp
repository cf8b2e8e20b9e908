#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gradsal/superpixel.hpp"
#include "gradsal/tensor.hpp"

namespace gradsal {

// Decoded raster: 1 (gray) or 3 (RGB) interleaved channels, 8 or 16 bits.
struct Raster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0;
    int bit_depth = 8;
    std::vector<std::uint16_t> samples;

    std::uint16_t max_value() const { return bit_depth == 16 ? 65535 : 255; }
};

// PNG (.png) and binary PNM (.pgm, .ppm, .pnm) by extension. Alpha is
// dropped, palettes are expanded.
Raster read_raster(const std::filesystem::path& path);
void write_raster(const Raster& raster, const std::filesystem::path& path);

bool is_image_file(const std::filesystem::path& path);

// Values scaled into [0, 1]. Gray files are replicated into three channels.
ImageRGB read_rgb(const std::filesystem::path& path);
// Gray value scaled into [0, 1]; RGB files use the channel mean.
Map read_gray(const std::filesystem::path& path);
// Foreground where the 8-bit gray value exceeds 127.
Mask read_mask(const std::filesystem::path& path);

// 8-bit: round(255 * clamp(v, 0, 1)).
void write_gray8(const Map& map, const std::filesystem::path& path);
void write_rgb8(const ImageRGB& image, const std::filesystem::path& path);
void write_mask(const Mask& mask, const std::filesystem::path& path);
// 16-bit label image; throws if there are more than 65536 labels.
void write_labels16(const SuperpixelMap& sp, const std::filesystem::path& path);

std::uint8_t quantize8(double v);

}  // namespace gradsal

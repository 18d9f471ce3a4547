#pragma once

#include <filesystem>

#include "reld/image.hpp"

namespace reld {

/// Load an 8- or 16-bit PNG or binary/ASCII PGM/PPM. Samples are divided by
/// the maximum sample value of the file (255, 65535, or the PNM maxval).
/// Alpha channels are dropped; palette PNGs are expanded to RGB.
Image load_image(const std::filesystem::path& path);

/// Save as PNG (".png") or PGM/PPM (".pgm", ".ppm", ".pnm") at 8 or 16 bits.
/// Values are clipped to [0,1] and quantized as floor(v * max + 0.5).
void save_image(const Image& image, const std::filesystem::path& path, int bit_depth = 8);

}  // namespace reld

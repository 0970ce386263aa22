#pragma once

#include <array>
#include <filesystem>

#include "egovos/tensor.hpp"
#include "egovos/types.hpp"

namespace egovos {

/// 8-bit RGB (palette/gray inputs are expanded) as [3, h, w] in [0, 1].
Tensor read_rgb_png(const std::filesystem::path& path);
/// Values are rounded to the nearest k/255.
void write_rgb_png(const std::filesystem::path& path, const Tensor& image);

/// Palette-indexed (or 8-bit gray) mask; pixel value = object id. Values above
/// `num_objects` are rejected.
MaskMap read_mask_png(const std::filesystem::path& path, int num_objects);
/// Palette-indexed 8-bit PNG with the VOC/DAVIS colour map.
void write_mask_png(const std::filesystem::path& path, const MaskMap& mask);

/// 16-bit grayscale scaled to [0, 1] as [h, w].
Tensor read_depth_png(const std::filesystem::path& path);
/// Values are rounded to the nearest k/65535.
void write_depth_png(const std::filesystem::path& path, const Tensor& depth);

/// Colour for palette index i (the usual bit-interleaved VOC map).
std::array<unsigned char, 3> palette_color(int index);

}  // namespace egovos

#pragma once

#include "egovos/tensor.hpp"
#include "egovos/types.hpp"

namespace egovos {

/// Pads a raw [3, h, w] image on the bottom/right to the next multiple of `m`
/// by mirroring (edge pixel included: row h mirrors row h-1).
Frame pad_to_multiple(const Tensor& image, int m);

/// Mirror-pads any [C, h, w] or [h, w] raster to (height, width).
Tensor pad_reflect(const Tensor& raster, int height, int width);
MaskMap pad_reflect(const MaskMap& mask, int height, int width);

/// Top-left crop of a [C, H, W] or [H, W] raster.
Tensor crop(const Tensor& raster, int height, int width);
MaskMap crop(const MaskMap& mask, int height, int width);

/// Per-pixel argmax over channels; ties resolve to the lowest index.
MaskMap argmax_decode(const Tensor& scores);
MaskMap argmax_decode(const ProbabilityVolume& p);

/// Bilinear resize (half-pixel centers) of a [C, H, W] or [H, W] raster.
Tensor resize_bilinear(const Tensor& raster, int height, int width);
MaskMap resize_nearest(const MaskMap& mask, int height, int width);

Tensor flip_horizontal(const Tensor& raster);
MaskMap flip_horizontal(const MaskMap& mask);

/// [1, H/f, W/f] indicator: a cell is 1 if any pixel of `object` falls in it.
Tensor downsample_indicator(const MaskMap& mask, int object, int factor);

}  // namespace egovos

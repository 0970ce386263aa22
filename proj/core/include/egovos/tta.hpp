#pragma once

#include <utility>
#include <vector>

#include "egovos/types.hpp"

namespace egovos {

/// One inference pass: bilinear rescale then optional horizontal flip.
struct Variant {
  double scale = 1.0;
  bool flipped = false;

  friend bool operator==(const Variant&, const Variant&) = default;
};

/// Cartesian product scales x ({plain, flipped} if flip else {plain}), scale-major.
std::vector<Variant> make_variants(const std::vector<double>& scales, bool flip);

/// Nearest multiple of 16 (at least 16).
int round16(double v);

/// Frame size a variant runs at for an H x W frame.
std::pair<int, int> variant_size(int height, int width, const Variant& v);

Frame apply_variant(const Frame& frame, const Variant& v);
/// Depth map [H, W], bilinear.
Tensor apply_variant(const Tensor& depth, const Variant& v);
/// Masks use nearest-neighbour sampling.
MaskMap apply_variant(const MaskMap& mask, const Variant& v);

/// Undoes a variant: unflip, then (when the size changed) bilinear resize to
/// height x width and renormalize each pixel. Pure flips are bit-exact.
ProbabilityVolume invert_probability(const ProbabilityVolume& p, const Variant& v, int height,
                                     int width);

struct EnsembleResult {
  ProbabilityVolume probs;
  MaskMap mask;
};

/// Mean of the volumes followed by argmax. Accumulation is exact fixed point,
/// so the result does not depend on the order of `volumes` and repeating the
/// list leaves the mask unchanged.
EnsembleResult ensemble(const std::vector<ProbabilityVolume>& volumes);

}  // namespace egovos

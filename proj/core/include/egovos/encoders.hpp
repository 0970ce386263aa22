#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include "egovos/params.hpp"
#include "egovos/types.hpp"

namespace egovos {

enum class EncoderKind { kToyVisual, kToyGeometric, kExternal };

std::string to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(const std::string& name);

struct EncoderSpec {
  EncoderKind kind = EncoderKind::kToyVisual;
  std::array<int, 3> channels{32, 64, 128};
  /// Token stride of the backbone being stood in for: 4 for the hierarchical
  /// visual stream, 14 for the ViT-style geometric stream.
  int patch = 4;
  /// Archive supplying frozen weights (required for kExternal).
  std::optional<std::filesystem::path> weights_ref;

  static EncoderSpec visual_default() { return {}; }
  static EncoderSpec geometric_default() {
    return {EncoderKind::kToyGeometric, {32, 64, 128}, 14, std::nullopt};
  }
  void validate() const;
};

/// Geometric-stream input size whose patch grid equals the 1/16 visual grid:
/// (patch_g * H/16, patch_g * W/16). H and W must be multiples of 16.
std::pair<int, int> align_geometric_input(int height, int width, int patch_g = 14);

/// Three stages of paired 3x3 convolutions with ReLU after each, reaching
/// strides 4 / 8 / 16. Each halving is a 2x2 average pool ahead of a stride-1
/// convolution, so feature cells stay centered on the pixels they cover.
class VisualEncoder {
 public:
  static constexpr const char* kPrefix = "encoder.visual.";

  /// Registers parameters under `encoder.visual.*`. For kExternal the values
  /// come from `spec.weights_ref`.
  VisualEncoder(const EncoderSpec& spec, ParamSet& params, std::mt19937_64& rng);

  FeaturePyramid encode(const Frame& frame) const;
  const EncoderSpec& spec() const { return spec_; }

 private:
  EncoderSpec spec_;
  std::array<std::array<Var, 4>, 3> stages_;  // w1, b1, w2, b2 per stage
};

/// Depth stand-in for a patch-token backbone plus multi-scale head: resize the
/// depth map to the aligned size, embed non-overlapping patches, then
/// upsample the token grid x4 / x2 / x1 and apply one 3x3 conv + ReLU per scale.
class GeometricEncoder {
 public:
  static constexpr const char* kPrefix = "encoder.geometric.";

  GeometricEncoder(const EncoderSpec& spec, ParamSet& params, std::mt19937_64& rng);

  /// `depth` is [H, W] at the frame's padded size; the toy kinds read only it.
  FeaturePyramid encode(const Frame& frame, const Tensor* depth) const;
  const EncoderSpec& spec() const { return spec_; }

 private:
  EncoderSpec spec_;
  Var embed_w_, embed_b_;
  std::array<std::array<Var, 2>, 3> heads_;  // w, b per scale
};

}  // namespace egovos

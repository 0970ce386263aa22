#pragma once

#include <array>
#include <cstdint>

#include "egovos/params.hpp"
#include "egovos/types.hpp"

namespace egovos {

struct FusionConfig {
  std::array<int, 3> visual_channels{32, 64, 128};
  std::array<int, 3> geometric_channels{32, 64, 128};
  /// 2: hidden layer (width = output width) with ReLU; 1: a single linear map.
  int depth = 2;
};

/// Per-scale perceptron weights. For depth 1 only w1/b1 are set and map
/// straight to the output channels.
struct FusionParams {
  struct Scale {
    Var w1, b1, w2, b2;
  };
  std::array<Scale, 3> scales;

  int depth() const { return scales[0].w2.defined() ? 2 : 1; }
  /// Adds every array to `params` under `fusion.s{i}.{w1,b1,w2,b2}`.
  void register_into(ParamSet& params) const;
};

/// Weights ~ N(0, 1/fan_in), zero biases; deterministic per seed. Output
/// channels equal the visual channels so the decoder is indifferent to
/// whether fusion runs.
FusionParams init_fusion(const FusionConfig& config, std::uint64_t seed);

/// At every scale and location: out = W2 relu(W1 [v; g] + b1) + b2.
FeaturePyramid fuse_pyramids(const FeaturePyramid& visual, const FeaturePyramid& geometric,
                             const FusionParams& params);

}  // namespace egovos

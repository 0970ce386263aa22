#include "egovos/fusion.hpp"

#include <cmath>
#include <random>

#include "egovos/errors.hpp"
#include "egovos/ops.hpp"

namespace egovos {

void FusionParams::register_into(ParamSet& params) const {
  for (int i = 0; i < 3; ++i) {
    const std::string base = "fusion.s" + std::to_string(i + 1) + ".";
    const Scale& s = scales[i];
    auto put = [&](const char* leaf, const Var& v) {
      if (v.defined()) params.adopt(base + leaf, v);
    };
    put("w1", s.w1);
    put("b1", s.b1);
    put("w2", s.w2);
    put("b2", s.b2);
  }
}

FusionParams init_fusion(const FusionConfig& config, std::uint64_t seed) {
  if (config.depth != 1 && config.depth != 2) throw ConfigError("fusion depth must be 1 or 2");
  std::mt19937_64 rng(seed);
  FusionParams p;
  for (int i = 0; i < 3; ++i) {
    const int in = config.visual_channels[i] + config.geometric_channels[i];
    const int out = config.visual_channels[i];
    auto& s = p.scales[i];
    s.w1 = Var(random_normal({out, in}, 1.0 / std::sqrt(in), rng), true);
    s.b1 = Var(Tensor({out}), true);
    if (config.depth == 2) {
      s.w2 = Var(random_normal({out, out}, 1.0 / std::sqrt(out), rng), true);
      s.b2 = Var(Tensor({out}), true);
    }
  }
  return p;
}

FeaturePyramid fuse_pyramids(const FeaturePyramid& visual, const FeaturePyramid& geometric,
                             const FusionParams& params) {
  FeaturePyramid out;
  for (int i = 0; i < 3; ++i) {
    const auto& v = visual.levels[i].shape();
    const auto& g = geometric.levels[i].shape();
    if (v.size() != 3 || g.size() != 3 || v[1] != g[1] || v[2] != g[2]) {
      throw ShapeError("fusion scale " + std::to_string(i + 1) + ": visual " + shape_string(v) +
                       " and geometric " + shape_string(g) +
                       " differ spatially (geometric input alignment is broken)");
    }
    const auto& s = params.scales[i];
    Var x = ops::concat({visual.levels[i], geometric.levels[i]});
    x = ops::pointwise_linear(x, s.w1, s.b1);
    if (s.w2.defined()) x = ops::pointwise_linear(ops::relu(x), s.w2, s.b2);
    out.levels[i] = x;
  }
  return out;
}

}  // namespace egovos

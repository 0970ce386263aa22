#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "egovos/errors.hpp"
#include "egovos/fusion.hpp"
#include "oracles.hpp"

using namespace egovos;
using oracle::random_tensor;

namespace {

FeaturePyramid random_pyramid(const std::array<int, 3>& ch, int h, int w, std::mt19937_64& rng) {
  FeaturePyramid p;
  for (int s = 0; s < 3; ++s) {
    const int f = 4 << s;
    p.levels[s] = Var(random_tensor({ch[s], h / f, w / f}, rng));
  }
  return p;
}

}  // namespace

TEST(Fusion, ZeroOutputLayerGivesZeros) {
  std::mt19937_64 rng(1);
  FusionParams p = init_fusion({{3, 4, 5}, {2, 2, 2}, 2}, 7);
  for (auto& s : p.scales) {
    s.w2.mutable_value().fill(0);
    s.b2.mutable_value().fill(0);
  }
  FeaturePyramid out = fuse_pyramids(random_pyramid({3, 4, 5}, 32, 32, rng),
                                     random_pyramid({2, 2, 2}, 32, 32, rng), p);
  for (const Var& l : out.levels)
    for (double v : l.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(Fusion, ConstructedIdentityReproducesConcat) {
  std::mt19937_64 rng(2);
  const int cv = 3, cg = 2, c = cv + cg;
  FusionParams p = init_fusion({{cv, cv, cv}, {cg, cg, cg}, 2}, 1);
  const double shift = 100.0;
  for (auto& s : p.scales) {
    Tensor eye({c, c});
    for (int i = 0; i < c; ++i) eye[i * c + i] = 1.0;
    s.w1 = Var(eye);
    s.b1 = Var(Tensor({c}, shift));
    s.w2 = Var(eye);
    s.b2 = Var(Tensor({c}, -shift));
  }
  FeaturePyramid v = random_pyramid({cv, cv, cv}, 32, 32, rng);
  FeaturePyramid g = random_pyramid({cg, cg, cg}, 32, 32, rng);
  FeaturePyramid out = fuse_pyramids(v, g, p);
  for (int s = 0; s < 3; ++s) {
    const int hw = v.levels[s].dim(1) * v.levels[s].dim(2);
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < hw; ++i) {
        const double expect = ch < cv ? v.levels[s].value()[ch * hw + i]
                                      : g.levels[s].value()[(ch - cv) * hw + i];
        EXPECT_NEAR(out.levels[s].value()[ch * hw + i], expect, 1e-6);
      }
  }
}

TEST(Fusion, GradientAllScales) {
  std::mt19937_64 rng(3);
  FusionParams p = init_fusion({{3, 4, 5}, {2, 3, 2}, 2}, 5);
  FeaturePyramid v = random_pyramid({3, 4, 5}, 32, 32, rng);
  FeaturePyramid g = random_pyramid({2, 3, 2}, 32, 32, rng);
  std::vector<Var> inputs;
  std::array<Tensor, 3> probes;
  for (int s = 0; s < 3; ++s) {
    auto& sc = p.scales[s];
    inputs.insert(inputs.end(), {sc.w1, sc.b1, sc.w2, sc.b2, v.levels[s], g.levels[s]});
    const int f = 4 << s;
    probes[s] = random_tensor({v.channels()[s], 32 / f, 32 / f}, rng);
  }
  auto fn = [&] {
    FeaturePyramid out = fuse_pyramids(v, g, p);
    std::vector<Var> parts;
    for (int s = 0; s < 3; ++s) parts.push_back(oracle::weighted_sum(out.levels[s], probes[s]));
    return ops::sum(parts);
  };
  EXPECT_LT(oracle::finite_difference_check(fn, inputs).max_rel_error, 1e-4);
}

TEST(Fusion, InitDeterministicAndFanInScaled) {
  FusionParams a = init_fusion({{32, 64, 128}, {32, 64, 128}, 2}, 11);
  FusionParams b = init_fusion({{32, 64, 128}, {32, 64, 128}, 2}, 11);
  FusionParams c = init_fusion({{32, 64, 128}, {32, 64, 128}, 2}, 12);
  EXPECT_EQ(a.scales[2].w1.value(), b.scales[2].w1.value());
  EXPECT_NE(a.scales[2].w1.value(), c.scales[2].w1.value());
  // w1 at scale 3: 128 x 256 = 32768 entries, fan-in 256.
  const Tensor& w = a.scales[2].w1.value();
  double mean = 0, sq = 0;
  for (double x : w.values()) mean += x;
  mean /= w.size();
  for (double x : w.values()) sq += (x - mean) * (x - mean);
  const double sd = std::sqrt(sq / w.size());
  EXPECT_NEAR(sd, 1.0 / std::sqrt(256.0), 0.2 / std::sqrt(256.0));
}

TEST(Fusion, SpatialMismatchIsShapeError) {
  std::mt19937_64 rng(4);
  FusionParams p = init_fusion({{2, 2, 2}, {2, 2, 2}, 1}, 1);
  EXPECT_THROW(fuse_pyramids(random_pyramid({2, 2, 2}, 32, 32, rng),
                             random_pyramid({2, 2, 2}, 64, 32, rng), p),
               ShapeError);
}

TEST(Fusion, PointwiseUnderSpatialPermutation) {
  std::mt19937_64 rng(5);
  FusionParams p = init_fusion({{3, 3, 3}, {2, 2, 2}, 2}, 3);
  FeaturePyramid v = random_pyramid({3, 3, 3}, 64, 64, rng);
  FeaturePyramid g = random_pyramid({2, 2, 2}, 64, 64, rng);
  auto transpose = [](const Var& x) {
    const Tensor& t = x.value();
    Tensor out(t.shape());
    for (int c = 0; c < t.dim(0); ++c)
      for (int y = 0; y < t.dim(1); ++y)
        for (int xx = 0; xx < t.dim(2); ++xx) out.at(c, xx, y) = t.at(c, y, xx);
    return Var(out);
  };
  FeaturePyramid vt, gt;
  for (int s = 0; s < 3; ++s) {
    vt.levels[s] = transpose(v.levels[s]);
    gt.levels[s] = transpose(g.levels[s]);
  }
  FeaturePyramid a = fuse_pyramids(v, g, p), b = fuse_pyramids(vt, gt, p);
  for (int s = 0; s < 3; ++s) EXPECT_EQ(transpose(a.levels[s]).value(), b.levels[s].value());
}

TEST(Fusion, SingleLinearDepth) {
  FusionParams p = init_fusion({{3, 3, 3}, {2, 2, 2}, 1}, 3);
  EXPECT_EQ(p.depth(), 1);
  ParamSet ps;
  p.register_into(ps);
  EXPECT_TRUE(ps.contains("fusion.s1.w1"));
  EXPECT_FALSE(ps.contains("fusion.s1.w2"));
}

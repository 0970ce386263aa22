#include <random>

#include <gtest/gtest.h>

#include "egovos/errors.hpp"
#include "egovos/raster.hpp"
#include "egovos/tensor.hpp"
#include "egovos/types.hpp"
#include "oracles.hpp"

using namespace egovos;

namespace {

Tensor ramp_image(int h, int w) {
  Tensor t({3, h, w});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) t.at(c, y, x) = (c * 7 + y * 3 + x) % 97 / 96.0;
  return t;
}

}  // namespace

TEST(PadToMultiple, AlreadyMultipleIsUnchanged) {
  Tensor img = ramp_image(64, 64);
  Frame f = pad_to_multiple(img, 16);
  EXPECT_EQ(f.height(), 64);
  EXPECT_EQ(f.width(), 64);
  EXPECT_EQ(f.orig_h(), 64);
  EXPECT_EQ(f.data(), img);
}

TEST(PadToMultiple, ReflectsBottomRows) {
  Tensor img = ramp_image(60, 60);
  Frame f = pad_to_multiple(img, 16);
  ASSERT_EQ(f.height(), 64);
  ASSERT_EQ(f.width(), 64);
  EXPECT_EQ(f.orig_h(), 60);
  EXPECT_EQ(f.orig_w(), 60);
  for (int c = 0; c < 3; ++c)
    for (int x = 0; x < 60; ++x)
      for (int k = 0; k < 4; ++k) EXPECT_EQ(f.data().at(c, 60 + k, x), img.at(c, 59 - k, x));
  for (int y = 0; y < 60; ++y)
    for (int k = 0; k < 4; ++k) EXPECT_EQ(f.data().at(1, y, 60 + k), img.at(1, y, 59 - k));
}

TEST(PadToMultiple, WideFrame) {
  Frame f = pad_to_multiple(ramp_image(480, 854), 16);
  EXPECT_EQ(f.height(), 480);
  EXPECT_EQ(f.width(), 864);
}

TEST(PadToMultiple, EmptyImageRejected) {
  EXPECT_THROW(pad_to_multiple(Tensor({3, 0, 0}), 16), ShapeError);
}

TEST(PadToMultiple, CropRestoresOriginalForRandomSizes) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(1, 70);
  for (int i = 0; i < 100; ++i) {
    const int h = size(rng), w = size(rng);
    Tensor img = oracle::random_tensor({3, h, w}, rng, 0.0, 1.0);
    Frame f = pad_to_multiple(img, 16);
    EXPECT_EQ(f.height() % 16, 0);
    EXPECT_LT(f.height(), h + 16);
    EXPECT_EQ(crop(f.data(), h, w), img);
  }
}

TEST(FrameType, RejectsOutOfRangeValues) {
  Tensor t({3, 16, 16}, 0.5);
  t[3] = 1.5;
  EXPECT_THROW(Frame(t, 16, 16), ShapeError);
}

TEST(ArgmaxDecode, OneHotIsExact) {
  std::mt19937_64 rng(1);
  MaskMap m = oracle::random_blob_mask(12, 12, 3, rng);
  Tensor p({4, 12, 12});
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x) p.at(m.at(y, x), y, x) = 1.0;
  EXPECT_EQ(argmax_decode(ProbabilityVolume(p)), m);
}

TEST(ArgmaxDecode, UniformTieGoesToBackground) {
  Tensor p({3, 5, 5}, 1.0 / 3.0);
  MaskMap m = argmax_decode(p);
  EXPECT_EQ(m.count(0), 25u);
}

TEST(ArgmaxDecode, ScaleInvariant) {
  std::mt19937_64 rng(2);
  Tensor p = oracle::random_tensor({4, 9, 9}, rng, 0.0, 1.0);
  Tensor q = p;
  q *= 2.0;
  EXPECT_EQ(argmax_decode(p), argmax_decode(q));
}

TEST(ProbabilityVolumeType, RejectsBadSums) {
  Tensor p({2, 2, 2}, 0.5);
  EXPECT_NO_THROW(ProbabilityVolume{p});
  p[0] = 0.6;
  EXPECT_THROW(ProbabilityVolume{p}, ShapeError);
}

TEST(MaskMapType, RejectsLabelsOutOfRange) {
  EXPECT_THROW(MaskMap(2, 2, 1, {0, 1, 2, 0}), ShapeError);
}

TEST(Raster, FlipIsInvolution) {
  std::mt19937_64 rng(4);
  Tensor t = oracle::random_tensor({2, 7, 9}, rng);
  EXPECT_EQ(flip_horizontal(flip_horizontal(t)), t);
  EXPECT_EQ(flip_horizontal(t).at(1, 3, 0), t.at(1, 3, 8));
}

TEST(Raster, BilinearIdentityAndConstant) {
  std::mt19937_64 rng(5);
  Tensor t = oracle::random_tensor({2, 8, 8}, rng);
  EXPECT_EQ(resize_bilinear(t, 8, 8), t);
  Tensor c({1, 5, 7}, 0.25);
  const Tensor r = resize_bilinear(c, 11, 3);
  for (double v : r.values()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(Raster, DownsampleIndicatorIsAreaMax) {
  MaskMap m(32, 32, 2);
  m.set(17, 3, 2);
  Tensor ind = downsample_indicator(m, 2, 16);
  ASSERT_EQ(ind.shape(), (std::vector<int>{1, 2, 2}));
  EXPECT_EQ(ind[2], 1.0);
  EXPECT_EQ(ind[0] + ind[1] + ind[3], 0.0);
}

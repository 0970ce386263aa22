#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "egovos/errors.hpp"
#include "egovos/ops.hpp"
#include "oracles.hpp"

using namespace egovos;
using oracle::finite_difference_check;
using oracle::random_tensor;
using oracle::weighted_sum;

namespace {

constexpr double kGradTol = 1e-4;

}  // namespace

TEST(Autograd, NoGradGuardSkipsTape) {
  Var a(Tensor({2}, 1.0), true);
  {
    NoGradGuard g;
    Var b = ops::scale(a, 2.0);
    EXPECT_FALSE(b.requires_grad());
  }
  EXPECT_TRUE(ops::scale(a, 2.0).requires_grad());
}

TEST(Autograd, SharedSubexpressionAccumulates) {
  Var a(Tensor({1}, 3.0), true);
  Var b = ops::add(a, a);
  backward(ops::add(b, a));
  EXPECT_EQ(a.grad()[0], 3.0);
}

TEST(OpsGradient, Conv2dZeroAndReplicate) {
  std::mt19937_64 rng(10);
  for (auto mode : {ops::Padding::kZero, ops::Padding::kReplicate}) {
    for (int stride : {1, 2}) {
      Var x(random_tensor({2, 6, 5}, rng));
      Var w(random_tensor({3, 2, 3, 3}, rng));
      Var b(random_tensor({3}, rng));
      const int oh = (6 + 2 - 3) / stride + 1, ow = (5 + 2 - 3) / stride + 1;
      Tensor r = random_tensor({3, oh, ow}, rng);
      auto f = [&] { return weighted_sum(ops::conv2d(x, w, b, stride, 1, mode), r); };
      EXPECT_LT(finite_difference_check(f, {x, w, b}).max_rel_error, kGradTol);
    }
  }
}

TEST(OpsGradient, PatchEmbeddingConv) {
  std::mt19937_64 rng(11);
  Var x(random_tensor({1, 8, 8}, rng));
  Var w(random_tensor({4, 1, 4, 4}, rng));
  Var b(random_tensor({4}, rng));
  Tensor r = random_tensor({4, 2, 2}, rng);
  auto f = [&] { return weighted_sum(ops::conv2d(x, w, b, 4, 0), r); };
  EXPECT_LT(finite_difference_check(f, {x, w, b}).max_rel_error, kGradTol);
}

TEST(OpsGradient, AvgPool2) {
  std::mt19937_64 rng(13);
  Var x(random_tensor({2, 6, 4}, rng));
  Tensor r = random_tensor({2, 3, 2}, rng);
  auto f = [&] { return weighted_sum(ops::avg_pool2(x), r); };
  EXPECT_LT(finite_difference_check(f, {x}).max_rel_error, kGradTol);
}

TEST(Ops, AvgPool2MatchesResizeOnHalvedGrid) {
  std::mt19937_64 rng(14);
  Var x(random_tensor({1, 8, 8}, rng));
  const Tensor a = ops::avg_pool2(x).value();
  const Tensor b = ops::resize_bilinear(x, 4, 4).value();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(OpsGradient, ResizeBilinearUpAndDown) {
  std::mt19937_64 rng(12);
  Var x(random_tensor({2, 5, 6}, rng));
  for (auto [h, w] : {std::pair{10, 12}, std::pair{3, 4}, std::pair{7, 5}}) {
    Tensor r = random_tensor({2, h, w}, rng);
    auto f = [&] { return weighted_sum(ops::resize_bilinear(x, h, w), r); };
    EXPECT_LT(finite_difference_check(f, {x}).max_rel_error, kGradTol);
  }
}

TEST(OpsGradient, PointwiseConcatSliceReshape) {
  std::mt19937_64 rng(13);
  Var a(random_tensor({2, 3, 3}, rng));
  Var c(random_tensor({3, 3, 3}, rng));
  Var w(random_tensor({4, 5}, rng));
  Var b(random_tensor({4}, rng));
  Tensor r = random_tensor({2, 9}, rng);
  auto f = [&] {
    Var y = ops::relu(ops::pointwise_linear(ops::concat({a, c}), w, b));
    return weighted_sum(ops::reshape(ops::slice(y, 1, 2), {2, 9}), r);
  };
  EXPECT_LT(finite_difference_check(f, {a, c, w, b}).max_rel_error, kGradTol);
}

TEST(OpsGradient, AttentionReadBothSimilarities) {
  std::mt19937_64 rng(14);
  for (auto sim : {ops::Similarity::kDot, ops::Similarity::kNegL2}) {
    Var q(random_tensor({4, 6}, rng));
    Var k(random_tensor({4, 10}, rng));
    Var v(random_tensor({3, 10}, rng));
    Tensor r = random_tensor({3, 6}, rng);
    ops::AttentionOptions opts{sim, 0};
    auto f = [&] { return weighted_sum(ops::attention_read(q, k, v, opts), r); };
    EXPECT_LT(finite_difference_check(f, {q, k, v}).max_rel_error, kGradTol);
  }
}

TEST(Attention, RowsSumToOneAndTopKTruncates) {
  std::mt19937_64 rng(15);
  Tensor q = random_tensor({4, 7}, rng), k = random_tensor({4, 40}, rng);
  for (int top_k : {0, 5}) {
    Tensor a = ops::affinity(q, k, {ops::Similarity::kDot, top_k});
    for (int row = 0; row < 7; ++row) {
      double s = 0;
      int nonzero = 0;
      for (int m = 0; m < 40; ++m) {
        s += a[row * 40 + m];
        nonzero += a[row * 40 + m] > 0;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
      if (top_k) {
        EXPECT_EQ(nonzero, 5);
      }
    }
  }
}

TEST(SoftAggregate, ZeroLogitIsHalf) {
  Var p = ops::soft_aggregate(Var(Tensor({1, 2, 2}, 0.0)));
  for (double v : p.value().values()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(SoftAggregate, SaturatesAtLargeLogit) {
  Var p = ops::soft_aggregate(Var(Tensor({1, 1, 1}, 50.0)));
  EXPECT_GE(p.value()[1], 1 - 1e-5);
}

TEST(SoftAggregate, MatchesOddsFormulaOracle) {
  std::mt19937_64 rng(16);
  Tensor l = random_tensor({3, 4, 4}, rng, -20, 20);
  Tensor p = ops::soft_aggregate(Var(l)).value();
  for (int px = 0; px < 16; ++px) {
    double odds[3], total = 1;
    for (int i = 0; i < 3; ++i) {
      const double s = 1 / (1 + std::exp(-l[i * 16 + px]));
      odds[i] = std::clamp(s / (1 - s), 1e-6, 1e6);
      total += odds[i];
    }
    double sum = 0;
    EXPECT_NEAR(p[px], 1 / total, 1e-9);
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(p[(i + 1) * 16 + px], odds[i] / total, 1e-9);
      sum += p[(i + 1) * 16 + px];
    }
    EXPECT_NEAR(sum + p[px], 1.0, 1e-6);
  }
}

TEST(SoftAggregate, Gradient) {
  std::mt19937_64 rng(17);
  Var l(random_tensor({2, 3, 3}, rng, -3, 3));
  Tensor r = random_tensor({3, 3, 3}, rng);
  auto f = [&] { return weighted_sum(ops::soft_aggregate(l), r); };
  EXPECT_LT(finite_difference_check(f, {l}).max_rel_error, kGradTol);
}

TEST(SegmentationLoss, PerfectOneHotIsZero) {
  std::vector<int> labels{0, 1, 2, 1};
  Tensor p({3, 2, 2});
  for (int i = 0; i < 4; ++i) p[labels[i] * 4 + i] = 1.0;
  EXPECT_NEAR(ops::segmentation_loss(Var(p), labels).value()[0], 0.0, 1e-6);
}

TEST(SegmentationLoss, UniformTwoWayCrossEntropyIsLn2) {
  const int n = 36;
  std::vector<int> labels(n, 1);
  Tensor p({2, 6, 6}, 0.5);
  const double dice = 1.0 - (2 * 0.5 * n + 1.0) / (0.5 * n + n + 1.0);
  EXPECT_NEAR(ops::segmentation_loss(Var(p), labels).value()[0], std::log(2.0) + dice, 1e-12);
}

TEST(SegmentationLoss, Gradient) {
  std::mt19937_64 rng(18);
  Var l(random_tensor({2, 4, 4}, rng, -2, 2));
  std::vector<int> labels(16);
  for (int i = 0; i < 16; ++i) labels[i] = i % 3;
  auto f = [&] { return ops::segmentation_loss(ops::soft_aggregate(l), labels); };
  EXPECT_LT(finite_difference_check(f, {l}).max_rel_error, kGradTol);
}

TEST(SegmentationLoss, NonNegative) {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 20; ++t) {
    Var p = ops::soft_aggregate(Var(random_tensor({2, 5, 5}, rng, -5, 5)));
    std::vector<int> labels(25);
    for (auto& v : labels) v = static_cast<int>(rng() % 3);
    EXPECT_GE(ops::segmentation_loss(p, labels).value()[0], 0.0);
  }
}

TEST(Ops, ShapeErrors) {
  Var x(Tensor({2, 4, 4}));
  Var w(Tensor({3, 5, 3, 3}));
  EXPECT_THROW(ops::conv2d(x, w, Var(), 1, 1), ShapeError);
  EXPECT_THROW(ops::concat({Var(Tensor({1, 2, 2})), Var(Tensor({1, 3, 2}))}), ShapeError);
  EXPECT_THROW(ops::avg_pool2(Var(Tensor({1, 3, 4}))), ShapeError);
}

#include <random>

#include <gtest/gtest.h>

#include "egovos/errors.hpp"
#include "egovos/metrics.hpp"
#include "oracles.hpp"

using namespace egovos;

namespace {

MaskMap square(int h, int w, int y0, int x0, int size, int label = 1, int n = 1) {
  MaskMap m(h, w, n);
  for (int y = y0; y < y0 + size; ++y)
    for (int x = x0; x < x0 + size; ++x)
      if (y >= 0 && y < h && x >= 0 && x < w) m.set(y, x, label);
  return m;
}

MaskMap shifted(const MaskMap& m, int dy, int dx) {
  MaskMap out(m.height(), m.width(), m.num_objects());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      const int sy = y - dy, sx = x - dx;
      if (sy >= 0 && sy < m.height() && sx >= 0 && sx < m.width()) out.set(y, x, m.at(sy, sx));
    }
  return out;
}

}  // namespace

TEST(Jaccard, Examples) {
  MaskMap a = square(30, 30, 5, 5, 10);
  EXPECT_EQ(jaccard(a, a, 1), 1.0);
  EXPECT_EQ(jaccard(a, square(30, 30, 18, 18, 10), 1), 0.0);
  EXPECT_DOUBLE_EQ(jaccard(a, square(30, 30, 5, 10, 10), 1), 50.0 / 150.0);
  EXPECT_EQ(jaccard(MaskMap(4, 4, 1), MaskMap(4, 4, 1), 1), 1.0);
  EXPECT_THROW(jaccard(a, a, 2), ShapeError);
}

TEST(BoundaryF, Examples) {
  MaskMap a = square(30, 30, 5, 5, 10);
  EXPECT_EQ(boundary_f(a, a, 1), 1.0);
  EXPECT_EQ(boundary_f(a, square(30, 30, 6, 5, 10), 1, 1), 1.0);
  EXPECT_EQ(boundary_f(square(30, 30, 1, 1, 3), square(30, 30, 20, 20, 3), 1, 1), 0.0);
  EXPECT_EQ(boundary_f(MaskMap(8, 8, 1), MaskMap(8, 8, 1), 1), 1.0);
  EXPECT_EQ(boundary_f(a, MaskMap(30, 30, 1), 1), 0.0);
  EXPECT_EQ(default_boundary_tolerance(480, 854), 8);
  EXPECT_EQ(default_boundary_tolerance(64, 64), 1);
}

TEST(BoundaryF, MatchesExactDistanceOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 60; ++t) {
    MaskMap p = oracle::random_blob_mask(24, 24, 2, rng);
    MaskMap g = oracle::random_blob_mask(24, 24, 2, rng);
    for (int tol : {0, 1, 2, 3})
      for (int obj : {1, 2})
        EXPECT_NEAR(boundary_f(p, g, obj, tol), oracle::exact_boundary_f(p, g, obj, tol), 1e-9);
  }
}

TEST(Metrics, SymmetricAndTranslationInvariant) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    MaskMap p(40, 40, 1), g(40, 40, 1);
    MaskMap rp = oracle::random_blob_mask(20, 20, 1, rng), rg = oracle::random_blob_mask(20, 20, 1, rng);
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 20; ++x) {
        p.set(y + 10, x + 10, rp.at(y, x));
        g.set(y + 10, x + 10, rg.at(y, x));
      }
    EXPECT_EQ(jaccard(p, g, 1), jaccard(g, p, 1));
    EXPECT_EQ(boundary_f(p, g, 1, 2), boundary_f(g, p, 1, 2));
    EXPECT_EQ(jaccard(p, g, 1), jaccard(shifted(p, 3, -4), shifted(g, 3, -4), 1));
    EXPECT_EQ(boundary_f(p, g, 1, 2), boundary_f(shifted(p, 3, -4), shifted(g, 3, -4), 1, 2));
  }
}

TEST(Jaccard, MonotoneWhenAddingTruePixels) {
  std::mt19937_64 rng(4);
  MaskMap g = oracle::random_blob_mask(20, 20, 1, rng);
  MaskMap p(20, 20, 1);
  double last = jaccard(p, g, 1);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x)
      if (g.at(y, x) == 1) {
        p.set(y, x, 1);
        const double j = jaccard(p, g, 1);
        EXPECT_GE(j, last);
        last = j;
      }
  EXPECT_EQ(last, 1.0);
}

TEST(EvaluateSequence, MeansOverScoredFrames) {
  MaskMap g = square(20, 20, 0, 0, 10);
  MaskMap half = square(20, 20, 0, 0, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 5; x < 10; ++x) half.set(y, x, 0);
  std::map<int, MaskMap> gts{{0, g}, {1, g}, {2, g}};
  std::map<int, MaskMap> preds{{1, half}, {2, g}};
  SequenceScore s = evaluate_sequence(preds, gts, {0, 1, 2}, "seq");
  EXPECT_DOUBLE_EQ(s.j, 0.75);
  EXPECT_EQ(s.evaluated_frames, (std::vector<int>{1, 2}));
  EXPECT_DOUBLE_EQ(s.jf, 0.5 * (s.j + s.f));
}

TEST(EvaluateSequence, PerfectAndMissing) {
  MaskMap g = square(20, 20, 3, 3, 6, 2, 2);
  std::map<int, MaskMap> gts{{0, g}, {4, g}, {8, g}};
  SequenceScore s = evaluate_sequence({{4, g}, {8, g}}, gts, {0, 4, 8});
  EXPECT_EQ(s.jf, 1.0);
  EXPECT_THROW(evaluate_sequence({{4, g}}, gts, {0, 4, 8}), ConfigError);
}

TEST(SequenceScore, TableOneArithmetic) {
  SequenceScore a = SequenceScore::from_object_means("ms", {88.1}, {92.0}, {});
  SequenceScore b = SequenceScore::from_object_means("flip", {87.5}, {91.8}, {});
  EXPECT_NEAR(a.jf, 90.05, 1e-9);
  EXPECT_NEAR(b.jf, 89.65, 1e-9);
}

TEST(EvaluateDataset, UnweightedMean) {
  SequenceScore a = SequenceScore::from_object_means("a", {0.8}, {0.8}, {1});
  SequenceScore b = SequenceScore::from_object_means("b", {0.9}, {0.9}, {1});
  DatasetReport r = evaluate_dataset({a, b});
  EXPECT_NEAR(r.jf, 0.85, 1e-12);
  DatasetReport one = evaluate_dataset({a});
  EXPECT_EQ(one.jf, a.jf);
  DatasetReport same = evaluate_dataset({a, a});
  EXPECT_EQ(same.j, a.j);
  EXPECT_THROW(evaluate_dataset({}), ConfigError);
  EXPECT_NE(r.table().find("unweighted mean over sequences"), std::string::npos);
  EXPECT_EQ(r.to_json()["sequences"].size(), 2u);
}

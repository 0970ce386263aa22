#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "egovos/dataset.hpp"
#include "egovos/errors.hpp"
#include "egovos/image_io.hpp"
#include "egovos/synth.hpp"
#include "oracles.hpp"

using namespace egovos;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("egovos_dataio_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SynthConfig small_synth(std::uint64_t seed) {
  SynthConfig c;
  c.height = 40;
  c.width = 56;
  c.frames = 8;
  c.seed = seed;
  return c;
}

int count_label(const MaskMap& m, int label) {
  int n = 0;
  for (auto v : m.labels()) n += v == label;
  return n;
}

}  // namespace

TEST(ImageIo, RoundTrips) {
  fs::path dir = fresh_dir("io");
  std::mt19937_64 rng(1);
  Tensor rgb = oracle::random_tensor({3, 5, 7}, rng, 0, 1);
  for (double& v : rgb.values()) v = std::round(v * 255) / 255;
  write_rgb_png(dir / "a.png", rgb);
  EXPECT_EQ(read_rgb_png(dir / "a.png"), rgb);

  MaskMap m = oracle::random_blob_mask(9, 11, 3, rng);
  write_mask_png(dir / "m.png", m);
  EXPECT_EQ(read_mask_png(dir / "m.png", 3), m);
  EXPECT_THROW(read_mask_png(dir / "m.png", 1), IoError);

  Tensor d = oracle::random_tensor({6, 4}, rng, 0, 1);
  for (double& v : d.values()) v = std::round(v * 65535) / 65535;
  write_depth_png(dir / "d.png", d);
  EXPECT_EQ(read_depth_png(dir / "d.png"), d);
  EXPECT_THROW(read_rgb_png(dir / "missing.png"), IoError);
}

TEST(Synth, DeterministicPerSeed) {
  SynthClip a = render_clip(small_synth(7)), b = render_clip(small_synth(7));
  SynthClip c = render_clip(small_synth(8));
  ASSERT_EQ(a.frames.size(), 8u);
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    EXPECT_EQ(a.frames[i], b.frames[i]);
    EXPECT_EQ(a.masks[i], b.masks[i]);
    EXPECT_EQ(a.depths[i], b.depths[i]);
  }
  EXPECT_NE(a.frames[0], c.frames[0]);
}

TEST(Synth, TargetsVisibleInFirstFrameAndDepthNearerAtOcclusion) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthClip clip = render_clip(small_synth(seed));
    ASSERT_GE(clip.num_objects, 1);
    ASSERT_LE(clip.num_objects, 3);
    for (int obj = 1; obj <= clip.num_objects; ++obj)
      EXPECT_GE(count_label(clip.masks[0], obj), 15);
    for (std::size_t t = 0; t < clip.frames.size(); ++t) {
      const MaskMap& m = clip.masks[t];
      for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
          const double d = clip.depths[t][static_cast<std::size_t>(y) * m.width() + x];
          EXPECT_GE(d, 0.0);
          EXPECT_LE(d, 1.0);
          if (m.at(y, x) > 0) {
            EXPECT_GT(d, 0.2);
          }
        }
    }
  }
}

TEST(Synth, CrossingDipsAtMidClip) {
  SynthConfig c = small_synth(3);
  c.crossing = true;
  c.min_objects = c.max_objects = 2;
  c.distractors = 0;
  c.frames = 11;
  SynthClip clip = render_clip(c);
  int min_visible = 1 << 30;
  int first = std::min(count_label(clip.masks.front(), 1), count_label(clip.masks.front(), 2));
  for (const MaskMap& m : clip.masks)
    min_visible = std::min({min_visible, count_label(m, 1), count_label(m, 2)});
  const MaskMap& mid = clip.masks[5];
  EXPECT_LT(std::min(count_label(mid, 1), count_label(mid, 2)), first);
  EXPECT_EQ(std::min(count_label(mid, 1), count_label(mid, 2)), min_visible);
}

TEST(Synth, WriteAndLoadMatchInMemory) {
  fs::path dir = fresh_dir("clip");
  SynthClip clip = render_clip(small_synth(11));
  SequenceManifest man = write_clip(clip, dir / "clip", "clip");
  SequenceData loaded = load_sequence(SequenceManifest::read(dir / "clip" / "manifest.json"));
  SequenceData mem = to_sequence_data(clip, "clip");
  EXPECT_EQ(loaded.num_objects, clip.num_objects);
  ASSERT_EQ(loaded.frames.size(), mem.frames.size());
  EXPECT_EQ(loaded.frames[0].height(), 48);
  EXPECT_EQ(loaded.frames[0].width(), 64);
  EXPECT_EQ(loaded.orig_h(), 40);
  for (std::size_t i = 0; i < loaded.frames.size(); ++i) {
    EXPECT_EQ(loaded.frames[i].data(), mem.frames[i].data());
    EXPECT_EQ(*loaded.depth(static_cast<int>(i)), *mem.depth(static_cast<int>(i)));
  }
  EXPECT_EQ(loaded.masks, mem.masks);
  EXPECT_EQ(loaded.annotated, mem.annotated);
  ASSERT_EQ(discover_manifests(dir).size(), 1u);
  EXPECT_EQ(load_dataset(dir).size(), 1u);
}

TEST(Manifest, ValidationErrors) {
  nlohmann::json j = {{"sequence", "s"},
                      {"num_objects", 1},
                      {"frames", {{{"image", "a.png"}, {"mask", "a_m.png"}}, {{"image", "b.png"}}}},
                      {"annotated", {0}}};
  EXPECT_NO_THROW(SequenceManifest::from_json(j, "/tmp").validate());
  nlohmann::json bad = j;
  bad["annotated"] = {0, 1};
  EXPECT_THROW(SequenceManifest::from_json(bad, "/tmp").validate(), ConfigError);
  bad = j;
  bad["extra"] = 1;
  EXPECT_THROW(SequenceManifest::from_json(bad, "/tmp"), ConfigError);
  bad = j;
  bad["annotated"] = nlohmann::json::array();
  EXPECT_THROW(SequenceManifest::from_json(bad, "/tmp").validate(), ConfigError);
  EXPECT_THROW(SequenceManifest::read("/nonexistent/manifest.json"), IoError);
}

TEST(Manifest, JsonRoundTrip) {
  fs::path dir = fresh_dir("man");
  SequenceManifest m;
  m.sequence = "x";
  m.num_objects = 2;
  m.frames = {{"f0.png", "m0.png", "d0.png"}, {"f1.png", std::nullopt, "d1.png"}};
  m.annotated = {0};
  m.root = dir;
  m.write();
  SequenceManifest r = SequenceManifest::read(dir / "manifest.json");
  EXPECT_EQ(r.to_json(), m.to_json());
}

TEST(Dataset, SizeMismatchRaises) {
  fs::path dir = fresh_dir("mismatch");
  SynthClip clip = render_clip(small_synth(2));
  write_clip(clip, dir, "c");
  write_depth_png(dir / "depth" / "00001.png", Tensor({8, 8}));
  EXPECT_THROW(load_sequence(SequenceManifest::read(dir / "manifest.json")), ShapeError);
}

TEST(PseudoVideo, Sampling) {
  std::mt19937_64 rng(4);
  std::vector<int> ann{0, 2, 4, 6, 8, 10, 12};
  for (int t = 0; t < 200; ++t) {
    auto idx = sample_pseudo_video(ann, 3, 2, rng);
    ASSERT_EQ(idx.size(), 3u);
    for (std::size_t i = 1; i < idx.size(); ++i) {
      const int gap = (idx[i] - idx[i - 1]) / 2;
      EXPECT_GE(gap, 1);
      EXPECT_LE(gap, 2);
    }
  }
  auto exact = sample_pseudo_video({3, 5, 9}, 3, 4, rng);
  EXPECT_EQ(exact, (std::vector<int>{3, 5, 9}));
  EXPECT_THROW(sample_pseudo_video({1, 2}, 3, 1, rng), ConfigError);
}

TEST(SynthConfig, Validation) {
  SynthConfig c;
  c.min_objects = 4;
  c.max_objects = 2;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SynthConfig{};
  c.frames = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

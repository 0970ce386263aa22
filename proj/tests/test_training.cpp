#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "egovos/errors.hpp"
#include "egovos/synth.hpp"
#include "egovos/training.hpp"
#include "oracles.hpp"

using namespace egovos;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny_config(bool fusion) {
  ModelConfig c;
  c.visual.channels = {4, 6, 8};
  c.geometric.channels = {4, 6, 8};
  c.memory.key_channels = 6;
  c.memory.value_channels = 8;
  c.fusion_enabled = fusion;
  return c;
}

std::vector<SequenceData> tiny_dataset(int clips, std::uint64_t seed) {
  SynthConfig s;
  s.height = 32;
  s.width = 32;
  s.frames = 5;
  s.seed = seed;
  std::vector<SequenceData> out;
  int i = 0;
  for (const SynthClip& c : render_clips(s, clips)) out.push_back(to_sequence_data(c, "c" + std::to_string(i++)));
  return out;
}

StageConfig quick(int stage, int iterations) {
  StageConfig c = stage == 1 ? StageConfig::stage1() : StageConfig::stage2();
  c.iterations = iterations;
  c.batch_size = 1;
  c.learning_rate = 2e-3;
  c.weight_decay = 0.05;
  return c;
}

}  // namespace

TEST(SegmentationLoss, PerfectAndUniform) {
  MaskMap gt(2, 2, 1);
  gt.set(0, 0, 1);
  Tensor perfect({2, 2, 2});
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) perfect.at(gt.at(y, x), y, x) = 1.0;
  EXPECT_NEAR(segmentation_loss(ProbabilityVolume(perfect), gt), 0.0, 1e-12);
  Tensor uniform({2, 2, 2});
  uniform.fill(0.5);
  const double l = segmentation_loss(ProbabilityVolume(uniform), gt);
  EXPECT_GT(l, std::log(2.0));
  EXPECT_THROW(segmentation_loss(ProbabilityVolume(uniform), MaskMap(3, 2, 1)), ShapeError);
}

TEST(StageConfig, Validation) {
  StageConfig s = StageConfig::stage1();
  EXPECT_NO_THROW(s.validate());
  s.frozen_prefixes.clear();
  EXPECT_THROW(s.validate(), ConfigError);
  s = StageConfig::stage2();
  EXPECT_EQ(s.frozen_prefixes, (std::vector<std::string>{"encoder.geometric."}));
  EXPECT_TRUE(StageConfig::stage2(true).frozen_prefixes.empty());
  s.max_scale = 3.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = StageConfig::stage2();
  s.n_frames = 1;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(AdamW, DecayAppliesToWeightsOnly) {
  ParamSet p;
  p.add("m.w", Tensor({1}, {1.0}));
  p.add("m.b", Tensor({1}, {1.0}));
  p.set_trainable({});
  for (auto& [name, v] : p) v.grad_buffer();
  AdamW opt(0.1, 0.5);
  opt.step(p);
  EXPECT_NEAR(p.get("m.w").value()[0], 1.0 - 0.1 * 0.5, 1e-12);
  EXPECT_EQ(p.get("m.b").value()[0], 1.0);
}

TEST(TrainStage, Stage1FreezesEncodersBitExact) {
  auto data = tiny_dataset(2, 1);
  Model model(tiny_config(true), 3);
  const auto enc = model.params().fingerprint("encoder.");
  const auto seg = model.params().fingerprint("segmenter.");
  train_stage(model, data, quick(1, 3));
  EXPECT_EQ(model.params().fingerprint("encoder."), enc);
  EXPECT_NE(model.params().fingerprint("segmenter."), seg);
}

TEST(TrainStage, Stage2KeepsGeometricFrozen) {
  auto data = tiny_dataset(2, 2);
  Model model(tiny_config(true), 4);
  const auto geo = model.params().fingerprint("encoder.geometric.");
  const auto vis = model.params().fingerprint("encoder.visual.");
  train_stage(model, data, quick(2, 3));
  EXPECT_EQ(model.params().fingerprint("encoder.geometric."), geo);
  EXPECT_NE(model.params().fingerprint("encoder.visual."), vis);
}

TEST(TrainStage, DeterministicForSeed) {
  auto data = tiny_dataset(2, 3);
  StageConfig c = quick(2, 3);
  c.min_scale = 1.0;
  c.max_scale = 1.5;
  c.random_flip = true;
  Model a(tiny_config(true), 5), b(tiny_config(true), 5);
  auto la = train_stage(a, data, c);
  auto lb = train_stage(b, data, c);
  EXPECT_EQ(la, lb);
  EXPECT_EQ(a.params().fingerprint(), b.params().fingerprint());
}

TEST(TrainStage, OverfitsSingleBatch) {
  auto data = tiny_dataset(1, 4);
  StageConfig c = quick(2, 120);
  c.learning_rate = 3e-3;
  c.weight_decay = 0.0;
  c.teacher_forcing_fraction = 1.0;
  c.n_frames = 2;
  Model model(tiny_config(false), 6);
  auto losses = train_stage(model, data, c);
  ASSERT_EQ(losses.size(), 120u);
  for (double l : losses) EXPECT_TRUE(std::isfinite(l));
  EXPECT_LT(losses.back(), 0.5 * losses.front());
}

TEST(ClipLoss, FiniteAndRequiresFrames) {
  auto data = tiny_dataset(1, 5);
  Model model(tiny_config(true), 7);
  Var l = clip_loss(model, data[0], {0, 1, 2}, true);
  EXPECT_TRUE(std::isfinite(l.value()[0]));
  Var s = clip_loss(model, data[0], {0, 1, 2}, false, Variant{1.25, true});
  EXPECT_TRUE(std::isfinite(s.value()[0]));
  EXPECT_THROW(clip_loss(model, data[0], {0}, true), ConfigError);
}

TEST(LossCurve, CsvFormat) {
  fs::path p = fs::temp_directory_path() / "egovos_loss.csv";
  write_loss_curve(p, {1.5, 0.25});
  std::ifstream in(p);
  std::string h, a, b;
  std::getline(in, h);
  std::getline(in, a);
  std::getline(in, b);
  EXPECT_EQ(h, "iteration,loss");
  EXPECT_EQ(a.substr(0, 2), "0,");
  EXPECT_EQ(b.substr(0, 2), "1,");
}

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "egovos/config.hpp"
#include "egovos/errors.hpp"
#include "egovos/image_io.hpp"
#include "egovos/inference.hpp"
#include "egovos/pipeline.hpp"

using namespace egovos;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_run(const std::string& name) {
  RunConfig c;
  c.model.visual.channels = {4, 6, 8};
  c.model.geometric.channels = {4, 6, 8};
  c.model.memory.key_channels = 6;
  c.model.memory.value_channels = 8;
  c.stage1.iterations = 2;
  c.stage1.batch_size = 1;
  c.stage2.iterations = 2;
  c.stage2.batch_size = 1;
  c.synth.height = 32;
  c.synth.width = 32;
  c.synth.frames = 5;
  c.train_clips = 2;
  c.eval_clips = 2;
  c.tta_scales = {1.0, 1.5};
  c.out = fs::temp_directory_path() / ("egovos_pipeline_" + name);
  fs::remove_all(c.out);
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(RunConfig, JsonRoundTripAndStrictKeys) {
  RunConfig c = RunConfig::bench();
  c.seed = 9;
  c.tta_flip = false;
  RunConfig r = RunConfig::from_json(c.to_json());
  EXPECT_EQ(r.to_json(), c.to_json());
  EXPECT_EQ(RunConfig::from_json(nlohmann::json::object()).to_json(), RunConfig().to_json());
  try {
    RunConfig::from_json({{"memory", {{"topk", 3}}}});
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("memory.topk"), std::string::npos);
  }
  EXPECT_THROW(RunConfig::from_json({{"seed", "x"}}), ConfigError);
  EXPECT_EQ(c.variants(false).size(), 1u);
  EXPECT_EQ(RunConfig().variants(true).size(), 6u);
  EXPECT_NE(c.stage(1).seed, c.stage(2).seed);
}

TEST(Checkpoint, RoundTripIsExact) {
  RunConfig cfg = tiny_run("ckpt");
  Model model(cfg.model, 1);
  save_checkpoint(model, cfg.out / "ck");
  auto loaded = load_checkpoint(cfg.out / "ck");
  EXPECT_EQ(loaded->params().fingerprint(), model.params().fingerprint());
  EXPECT_EQ(model_config_json(loaded->config()), model_config_json(model.config()));
  EXPECT_THROW(load_checkpoint(cfg.out / "missing"), LoadError);
}

TEST(Pipeline, InferEvalMatchesInProcess) {
  RunConfig cfg = tiny_run("cli");
  cmd_synth(cfg);
  const fs::path ck = cmd_train(cfg);
  EXPECT_TRUE(fs::exists(cfg.out / "loss_stage1.csv"));
  EXPECT_TRUE(fs::exists(cfg.out / "loss_stage2.csv"));
  EXPECT_TRUE(fs::exists(cfg.out / "config.resolved.json"));
  cmd_infer(cfg, ck, cfg.resolved_eval_root());
  DatasetReport from_files = cmd_eval(cfg, cfg.out, cfg.resolved_eval_root());

  auto model = load_checkpoint(ck);
  auto eval = load_dataset(cfg.resolved_eval_root());
  DatasetReport direct = evaluate_model(*model, eval, cfg.variants(true));
  EXPECT_EQ(from_files.jf, direct.jf);
  EXPECT_EQ(from_files.j, direct.j);

  const std::string first = slurp(cfg.out / "scores.json");
  cmd_eval(cfg, cfg.out, cfg.resolved_eval_root());
  EXPECT_EQ(slurp(cfg.out / "scores.json"), first);

  DatasetReport gt = cmd_eval(cfg, cfg.resolved_eval_root(), cfg.resolved_eval_root());
  EXPECT_EQ(gt.jf, 1.0);

  const auto& seq = eval.front();
  SequencePrediction pred = predict_sequence(*model, seq, cfg.variants(false));
  EXPECT_EQ(pred.masks.at(seq.annotated.front()), seq.masks.at(seq.annotated.front()));
  EXPECT_EQ(pred.masks.size(), seq.frames.size());
  EXPECT_EQ(read_mask_png(cfg.out / "masks" / seq.sequence / frame_file_name(0), seq.num_objects),
            seq.masks.at(0));
}

TEST(Pipeline, AblationHasFourRows) {
  RunConfig cfg = tiny_run("ablate");
  auto rows = cmd_ablate(cfg);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_FALSE(rows[0].fusion);
  EXPECT_FALSE(rows[0].tta);
  EXPECT_TRUE(rows[3].fusion);
  EXPECT_TRUE(rows[3].tta);
  for (const auto& r : rows) EXPECT_DOUBLE_EQ(r.jf, 0.5 * (r.j + r.f));
  EXPECT_TRUE(fs::exists(cfg.out / "ablation.json"));
  EXPECT_NE(slurp(cfg.out / "ablation.txt").find("J&F"), std::string::npos);
  EXPECT_EQ(ablation_json(rows)["rows"].size(), 4u);
}

TEST(Pipeline, FrameFileName) { EXPECT_EQ(frame_file_name(7), "00007.png"); }

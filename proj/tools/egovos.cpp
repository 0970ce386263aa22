#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "egovos/config.hpp"
#include "egovos/errors.hpp"
#include "egovos/pipeline.hpp"

namespace {

struct Common {
  std::string config;
  std::string preset;
  long long seed = -1;
  std::string scales;
  int flip = -1;
  bool no_fusion = false;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration");
  cmd->add_option("--preset", c.preset, "Start from a named preset (default, bench)")
      ->check(CLI::IsMember({"default", "bench"}));
  cmd->add_option("--seed", c.seed, "Run seed");
  cmd->add_option("--scales", c.scales, "TTA scales, e.g. 1.2,1.3,1.4");
  cmd->add_flag_function(
      "--flip,!--no-flip", [&c](std::int64_t n) { c.flip = n > 0 ? 1 : 0; }, "Add flipped TTA passes");
  cmd->add_flag("--no-fusion", c.no_fusion, "Visual stream only");
  cmd->add_option("--out", c.out, "Output directory");
}

// Precedence: preset < config file < flags.
egovos::RunConfig resolve(const Common& c) {
  egovos::RunConfig cfg = c.preset == "bench" ? egovos::RunConfig::bench() : egovos::RunConfig();
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw egovos::IoError("cannot open config " + c.config);
    nlohmann::json j = nlohmann::json::parse(in);
    nlohmann::json base = cfg.to_json();
    base.merge_patch(j);
    cfg = egovos::RunConfig::from_json(base);
  }
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (!c.scales.empty()) {
    cfg.tta_scales.clear();
    std::stringstream ss(c.scales);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        cfg.tta_scales.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw egovos::ConfigError("--scales: cannot parse '" + item + "'");
      }
    }
  }
  if (c.flip >= 0) cfg.tta_flip = c.flip == 1;
  if (c.no_fusion) cfg.model.fusion_enabled = false;
  if (!c.out.empty()) cfg.out = c.out;
  cfg.validate();
  return cfg;
}

egovos::ProgressFn progress_printer() {
  return [](int it, double loss) {
    if (it % 50 == 0) std::fprintf(stderr, "iter %5d  loss %.4f\n", it, loss);
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Egocentric video object segmentation with RGB and depth streams"};
  app.set_version_flag("--version", std::string(egovos::version()));
  app.require_subcommand(1);

  Common common;
  std::string checkpoint, data, predictions;

  auto* synth = app.add_subcommand("synth", "Render the synthetic occlusion dataset");
  add_common(synth, common);

  auto* train = app.add_subcommand("train", "Two-stage training");
  add_common(train, common);

  auto* infer = app.add_subcommand("infer", "Predict masks for every sequence");
  add_common(infer, common);
  infer->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  infer->add_option("--manifest,--data", data, "Manifest file or dataset root")->required();

  auto* eval = app.add_subcommand("eval", "Score predicted masks");
  add_common(eval, common);
  eval->add_option("--predictions", predictions, "Prediction directory")->required();
  eval->add_option("--manifest,--data", data, "Manifest file or dataset root")->required();

  auto* ablate = app.add_subcommand("ablate", "Fusion x TTA ablation table");
  add_common(ablate, common);

  CLI11_PARSE(app, argc, argv);

  try {
    const egovos::RunConfig cfg = resolve(common);
    if (synth->parsed()) {
      egovos::cmd_synth(cfg);
      std::cout << "wrote " << cfg.resolved_train_root().string() << " and "
                << cfg.resolved_eval_root().string() << "\n";
    } else if (train->parsed()) {
      std::cout << "checkpoint " << egovos::cmd_train(cfg, progress_printer()).string() << "\n";
    } else if (infer->parsed()) {
      egovos::cmd_infer(cfg, checkpoint, data);
      std::cout << "wrote " << (cfg.out / "masks").string() << "\n";
    } else if (eval->parsed()) {
      std::cout << egovos::cmd_eval(cfg, predictions, data).table();
    } else if (ablate->parsed()) {
      std::cout << egovos::ablation_table(egovos::cmd_ablate(cfg, progress_printer()));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

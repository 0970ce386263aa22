#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "egovos/segmenter.hpp"
#include "egovos/synth.hpp"
#include "egovos/training.hpp"
#include "egovos/tta.hpp"

namespace egovos {

const char* version();

/// Everything a command needs. Defaults are the full desk-scale settings;
/// `bench()` is the reduced preset used by the ablation benchmark.
struct RunConfig {
  ModelConfig model;
  std::vector<double> tta_scales{1.2, 1.3, 1.4};
  bool tta_flip = true;
  StageConfig stage1 = StageConfig::stage1();
  StageConfig stage2 = StageConfig::stage2();
  SynthConfig synth;
  int train_clips = 40;
  int eval_clips = 10;
  std::filesystem::path train_root;  // empty: <out>/data/train
  std::filesystem::path eval_root;   // empty: <out>/data/eval
  std::filesystem::path out = "runs/egovos";
  std::uint64_t seed = 0;

  static RunConfig bench();

  /// Unknown keys and wrong types raise ConfigError naming the dotted key.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  std::filesystem::path resolved_train_root() const;
  std::filesystem::path resolved_eval_root() const;
  /// The TTA variant list; a single {1.0, plain} pass when tta is off.
  std::vector<Variant> variants(bool tta) const;
  /// Stage seeds derived from `seed`.
  StageConfig stage(int which) const;
  void validate() const;
};

/// Writes `config.resolved.json` (config, version, seed) into `dir`.
void write_resolved_config(const RunConfig& cfg, const std::filesystem::path& dir);

}  // namespace egovos

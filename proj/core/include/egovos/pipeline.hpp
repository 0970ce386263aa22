#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "egovos/config.hpp"
#include "egovos/dataset.hpp"
#include "egovos/metrics.hpp"
#include "egovos/segmenter.hpp"
#include "egovos/training.hpp"

namespace egovos {

/// Checkpoint directory: weight archive plus `model.json` (architecture).
void save_checkpoint(const Model& model, const std::filesystem::path& dir);
std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& dir);

nlohmann::json model_config_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Synthetic train/eval clips for `cfg` (seeds derived from cfg.seed).
std::pair<std::vector<SequenceData>, std::vector<SequenceData>> synth_datasets(const RunConfig& cfg);

/// Trains a fresh model through both stages.
struct TrainOutcome {
  std::unique_ptr<Model> model;
  std::vector<double> stage1_loss;
  std::vector<double> stage2_loss;
};
TrainOutcome train_model(const RunConfig& cfg, const std::vector<SequenceData>& train,
                         const ProgressFn& progress = {});

DatasetReport evaluate_model(const Model& model, const std::vector<SequenceData>& eval,
                             const std::vector<Variant>& variants);

struct AblationRow {
  bool fusion = false;
  bool tta = false;
  double j = 0;
  double f = 0;
  double jf = 0;
};

/// {fusion off, on} x {tta off, on}; each fusion setting is trained once.
std::vector<AblationRow> run_ablation(const RunConfig& cfg, const std::vector<SequenceData>& train,
                                      const std::vector<SequenceData>& eval,
                                      const ProgressFn& progress = {});
std::string ablation_table(const std::vector<AblationRow>& rows);
nlohmann::json ablation_json(const std::vector<AblationRow>& rows);

/// Writes `<out>/data/{train,eval}/<clip>/` (or the configured roots).
void cmd_synth(const RunConfig& cfg);
/// Writes `<out>/checkpoint/` and `<out>/loss_stage{1,2}.csv`; returns the checkpoint dir.
std::filesystem::path cmd_train(const RunConfig& cfg, const ProgressFn& progress = {});
/// Writes `<out>/masks/<seq>/<frame>.png` for every frame from the first annotated one.
void cmd_infer(const RunConfig& cfg, const std::filesystem::path& checkpoint,
               const std::filesystem::path& data);
/// Reads predictions (`<predictions>/masks/<seq>/`, `<predictions>/<seq>/` or
/// `<predictions>/<seq>/masks/`, so a dataset root scores its own masks) and
/// writes `<out>/scores.json` and `<out>/scores.txt`.
DatasetReport cmd_eval(const RunConfig& cfg, const std::filesystem::path& predictions,
                       const std::filesystem::path& data);
/// Synthesizes data when the roots do not exist, then writes
/// `<out>/ablation.json` and `<out>/ablation.txt`.
std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const ProgressFn& progress = {});

std::string frame_file_name(int index);

}  // namespace egovos

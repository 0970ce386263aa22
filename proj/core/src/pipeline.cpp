#include "egovos/pipeline.hpp"

#include <cstdio>
#include <fstream>

#include "egovos/archive.hpp"
#include "egovos/errors.hpp"
#include "egovos/image_io.hpp"
#include "egovos/inference.hpp"

namespace egovos {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json encoder_spec_json(const EncoderSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"channels", s.channels},
          {"patch", s.patch},
          {"weights", s.weights_ref ? s.weights_ref->string() : std::string()}};
}

EncoderSpec encoder_spec_from_json(const json& j) {
  EncoderSpec s;
  s.kind = encoder_kind_from_string(j.at("kind").get<std::string>());
  s.channels = j.at("channels").get<std::array<int, 3>>();
  s.patch = j.at("patch").get<int>();
  const std::string w = j.value("weights", std::string());
  if (!w.empty()) s.weights_ref = fs::path(w);
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed * 0x9E3779B97F4A7C15ULL + salt;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string clip_name(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%03d", prefix, i);
  return buf;
}

}  // namespace

std::string frame_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05d.png", index);
  return buf;
}

json model_config_json(const ModelConfig& c) {
  const MemoryConfig& m = c.memory;
  return {{"visual", encoder_spec_json(c.visual)},
          {"geometric", encoder_spec_json(c.geometric)},
          {"fusion_enabled", c.fusion_enabled},
          {"fusion_depth", c.fusion_depth},
          {"memory",
           {{"key_channels", m.key_channels},
            {"value_channels", m.value_channels},
            {"max_tail", m.max_tail},
            {"write_interval", m.write_interval},
            {"similarity", m.attention.similarity == ops::Similarity::kDot ? "dot" : "neg_l2"},
            {"top_k", m.attention.top_k}}}};
}

ModelConfig model_config_from_json(const json& j) {
  try {
    ModelConfig c;
    c.visual = encoder_spec_from_json(j.at("visual"));
    c.geometric = encoder_spec_from_json(j.at("geometric"));
    c.fusion_enabled = j.at("fusion_enabled").get<bool>();
    c.fusion_depth = j.at("fusion_depth").get<int>();
    const json& m = j.at("memory");
    c.memory.key_channels = m.at("key_channels").get<int>();
    c.memory.value_channels = m.at("value_channels").get<int>();
    c.memory.max_tail = m.at("max_tail").get<int>();
    c.memory.write_interval = m.at("write_interval").get<int>();
    c.memory.attention.similarity =
        m.at("similarity").get<std::string>() == "neg_l2" ? ops::Similarity::kNegL2 : ops::Similarity::kDot;
    c.memory.attention.top_k = m.at("top_k").get<int>();
    return c;
  } catch (const json::exception& e) {
    throw LoadError(std::string("model.json: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const fs::path& dir) {
  save_weight_archive(dir, model.params().to_arrays());
  write_text(dir / "model.json", model_config_json(model.config()).dump(2) + "\n");
}

std::unique_ptr<Model> load_checkpoint(const fs::path& dir) {
  if (!fs::is_regular_file(dir / "model.json")) throw LoadError("checkpoint not found: " + dir.string());
  std::ifstream in(dir / "model.json");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw LoadError("checkpoint " + dir.string() + ": corrupt model.json");
  }
  auto model = std::make_unique<Model>(model_config_from_json(j), 0);
  model->params().assign(load_weight_archive(dir, model->params().expected_shapes()));
  return model;
}

std::pair<std::vector<SequenceData>, std::vector<SequenceData>> synth_datasets(const RunConfig& cfg) {
  SynthConfig sc = cfg.synth;
  std::pair<std::vector<SequenceData>, std::vector<SequenceData>> out;
  sc.seed = mix_seed(cfg.seed, 1);
  auto train = render_clips(sc, cfg.train_clips);
  for (std::size_t i = 0; i < train.size(); ++i)
    out.first.push_back(to_sequence_data(train[i], clip_name("train", static_cast<int>(i))));
  sc.seed = mix_seed(cfg.seed, 2);
  auto eval = render_clips(sc, cfg.eval_clips);
  for (std::size_t i = 0; i < eval.size(); ++i)
    out.second.push_back(to_sequence_data(eval[i], clip_name("eval", static_cast<int>(i))));
  return out;
}

TrainOutcome train_model(const RunConfig& cfg, const std::vector<SequenceData>& train,
                         const ProgressFn& progress) {
  TrainOutcome out;
  out.model = std::make_unique<Model>(cfg.model, cfg.seed);
  out.stage1_loss = train_stage(*out.model, train, cfg.stage(1), progress);
  out.stage2_loss = train_stage(*out.model, train, cfg.stage(2), progress);
  return out;
}

DatasetReport evaluate_model(const Model& model, const std::vector<SequenceData>& eval,
                             const std::vector<Variant>& variants) {
  std::vector<SequenceScore> scores;
  for (const auto& seq : eval) {
    SequencePrediction p = predict_sequence(model, seq, variants);
    scores.push_back(evaluate_sequence(p.masks, seq.masks, seq.annotated, seq.sequence));
  }
  return evaluate_dataset(scores);
}

std::vector<AblationRow> run_ablation(const RunConfig& cfg, const std::vector<SequenceData>& train,
                                      const std::vector<SequenceData>& eval,
                                      const ProgressFn& progress) {
  std::vector<AblationRow> rows;
  for (bool fusion : {false, true}) {
    RunConfig c = cfg;
    c.model.fusion_enabled = fusion;
    TrainOutcome t = train_model(c, train, progress);
    for (bool tta : {false, true}) {
      DatasetReport r = evaluate_model(*t.model, eval, c.variants(tta));
      rows.push_back({fusion, tta, r.j, r.f, r.jf});
    }
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::string out = "Fusion | TTA | J&F    | J      | F\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-6s | %-3s | %5.1f%% | %5.1f%% | %5.1f%%\n",
                  r.fusion ? "yes" : "no", r.tta ? "yes" : "no", 100 * r.jf, 100 * r.j, 100 * r.f);
    out += buf;
  }
  return out;
}

json ablation_json(const std::vector<AblationRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"fusion", r.fusion}, {"tta", r.tta}, {"jf", r.jf}, {"j", r.j}, {"f", r.f}});
  return {{"rows", arr}};
}

void cmd_synth(const RunConfig& cfg) {
  cfg.validate();
  SynthConfig sc = cfg.synth;
  sc.seed = mix_seed(cfg.seed, 1);
  auto train = render_clips(sc, cfg.train_clips);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const std::string name = clip_name("train", static_cast<int>(i));
    write_clip(train[i], cfg.resolved_train_root() / name, name);
  }
  sc.seed = mix_seed(cfg.seed, 2);
  auto eval = render_clips(sc, cfg.eval_clips);
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const std::string name = clip_name("eval", static_cast<int>(i));
    write_clip(eval[i], cfg.resolved_eval_root() / name, name);
  }
  write_resolved_config(cfg, cfg.out);
}

fs::path cmd_train(const RunConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  std::vector<SequenceData> train = load_dataset(cfg.resolved_train_root());
  TrainOutcome t = train_model(cfg, train, progress);
  const fs::path ckpt = cfg.out / "checkpoint";
  save_checkpoint(*t.model, ckpt);
  write_loss_curve(cfg.out / "loss_stage1.csv", t.stage1_loss);
  write_loss_curve(cfg.out / "loss_stage2.csv", t.stage2_loss);
  write_resolved_config(cfg, cfg.out);
  return ckpt;
}

void cmd_infer(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& data) {
  cfg.validate();
  std::unique_ptr<Model> model = load_checkpoint(checkpoint);
  const std::vector<Variant> variants = cfg.variants(true);
  for (const auto& manifest : discover_manifests(data)) {
    SequenceData seq = load_sequence(manifest);
    SequencePrediction p = predict_sequence(*model, seq, variants);
    for (const auto& [idx, mask] : p.masks)
      write_mask_png(cfg.out / "masks" / seq.sequence / frame_file_name(idx), mask);
  }
  write_resolved_config(cfg, cfg.out);
}

DatasetReport cmd_eval(const RunConfig& cfg, const fs::path& predictions, const fs::path& data) {
  const fs::path mask_root = fs::is_directory(predictions / "masks") ? predictions / "masks" : predictions;
  if (!fs::is_directory(mask_root)) throw IoError("predictions not found: " + predictions.string());
  std::vector<SequenceScore> scores;
  for (const auto& manifest : discover_manifests(data)) {
    SequenceData seq = load_sequence(manifest);
    std::map<int, MaskMap> preds;
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
      fs::path p = mask_root / seq.sequence / frame_file_name(static_cast<int>(i));
      if (!fs::is_regular_file(p)) p = mask_root / seq.sequence / "masks" / frame_file_name(static_cast<int>(i));
      if (fs::is_regular_file(p)) preds.emplace(static_cast<int>(i), read_mask_png(p, seq.num_objects));
    }
    scores.push_back(evaluate_sequence(preds, seq.masks, seq.annotated, seq.sequence));
  }
  DatasetReport report = evaluate_dataset(scores);
  write_text(cfg.out / "scores.json", report.to_json().dump(2) + "\n");
  write_text(cfg.out / "scores.txt", report.table());
  write_resolved_config(cfg, cfg.out);
  return report;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  if (!fs::exists(cfg.resolved_train_root()) || !fs::exists(cfg.resolved_eval_root())) cmd_synth(cfg);
  std::vector<SequenceData> train = load_dataset(cfg.resolved_train_root());
  std::vector<SequenceData> eval = load_dataset(cfg.resolved_eval_root());
  std::vector<AblationRow> rows = run_ablation(cfg, train, eval, progress);
  write_text(cfg.out / "ablation.json", ablation_json(rows).dump(2) + "\n");
  write_text(cfg.out / "ablation.txt", ablation_table(rows));
  write_resolved_config(cfg, cfg.out);
  return rows;
}

}  // namespace egovos

#include "egovos/config.hpp"

#include <fstream>
#include <set>

#include "egovos/errors.hpp"

#ifndef EGOVOS_VERSION
#define EGOVOS_VERSION "unknown"
#endif

namespace egovos {

namespace fs = std::filesystem;
using nlohmann::json;

const char* version() { return EGOVOS_VERSION; }

namespace {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config key '" + name() + "' must be an object");
  }

  template <class T>
  void get(const std::string& key, T& dst) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + path_ + key + "' has the wrong type");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  Reader child(const std::string& key) {
    seen_.insert(key);
    return Reader(j_.at(key), path_ + key + ".");
  }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + path_ + key + "'");
  }

  std::string name() const { return path_.empty() ? "<root>" : path_.substr(0, path_.size() - 1); }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_encoder(Reader r, EncoderSpec& spec) {
  std::string kind = to_string(spec.kind);
  r.get("kind", kind);
  try {
    spec.kind = encoder_kind_from_string(kind);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + r.path() + "kind' has unknown value '" + kind + "'");
  }
  r.get("channels", spec.channels);
  r.get("patch", spec.patch);
  if (r.has("weights")) {
    std::string w;
    r.get("weights", w);
    spec.weights_ref = w.empty() ? std::nullopt : std::optional<fs::path>(w);
  }
  r.finish();
}

json encoder_json(const EncoderSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"channels", s.channels},
          {"patch", s.patch},
          {"weights", s.weights_ref ? s.weights_ref->string() : std::string()}};
}

void read_stage(Reader r, StageConfig& s) {
  r.get("iterations", s.iterations);
  r.get("batch_size", s.batch_size);
  r.get("learning_rate", s.learning_rate);
  r.get("weight_decay", s.weight_decay);
  r.get("frozen_prefixes", s.frozen_prefixes);
  r.get("n_frames", s.n_frames);
  r.get("max_skip", s.max_skip);
  r.get("teacher_forcing_fraction", s.teacher_forcing_fraction);
  r.get("grad_clip", s.grad_clip);
  r.get("min_scale", s.min_scale);
  r.get("max_scale", s.max_scale);
  r.get("random_flip", s.random_flip);
  r.get("cosine_decay", s.cosine_decay);
  r.finish();
}

json stage_json(const StageConfig& s) {
  return {{"iterations", s.iterations},
          {"batch_size", s.batch_size},
          {"learning_rate", s.learning_rate},
          {"weight_decay", s.weight_decay},
          {"frozen_prefixes", s.frozen_prefixes},
          {"n_frames", s.n_frames},
          {"max_skip", s.max_skip},
          {"teacher_forcing_fraction", s.teacher_forcing_fraction},
          {"grad_clip", s.grad_clip},
          {"min_scale", s.min_scale},
          {"max_scale", s.max_scale},
          {"random_flip", s.random_flip},
          {"cosine_decay", s.cosine_decay}};
}

std::string shape_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::kDisk: return "disk";
    case ShapeKind::kSquare: return "square";
    case ShapeKind::kTriangle: return "triangle";
  }
  return "disk";
}

ShapeKind shape_from_name(const std::string& s) {
  if (s == "disk") return ShapeKind::kDisk;
  if (s == "square") return ShapeKind::kSquare;
  if (s == "triangle") return ShapeKind::kTriangle;
  throw ConfigError("config key 'synth.shapes' has unknown shape '" + s + "'");
}

}  // namespace

RunConfig RunConfig::bench() {
  RunConfig c;
  c.model.visual.channels = {16, 32, 64};
  c.model.geometric.channels = {16, 32, 64};
  c.model.memory.key_channels = 32;
  c.model.memory.value_channels = 64;
  for (StageConfig* s : {&c.stage1, &c.stage2}) {
    s->iterations = 400;
    s->learning_rate = 2e-3;
    s->weight_decay = 0.05;
    s->min_scale = 1.0;
    s->max_scale = 1.5;
    s->random_flip = true;
  }
  c.out = "runs/bench";
  return c;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  Reader root(j, "");
  root.get("seed", c.seed);
  std::string out = c.out.string();
  root.get("out", out);
  c.out = out;
  if (root.has("encoder")) {
    Reader e = root.child("encoder");
    if (e.has("visual")) read_encoder(e.child("visual"), c.model.visual);
    if (e.has("geometric")) read_encoder(e.child("geometric"), c.model.geometric);
    e.finish();
  }
  if (root.has("fusion")) {
    Reader f = root.child("fusion");
    f.get("enabled", c.model.fusion_enabled);
    f.get("depth", c.model.fusion_depth);
    f.finish();
  }
  if (root.has("memory")) {
    Reader m = root.child("memory");
    MemoryConfig& mc = c.model.memory;
    m.get("key_channels", mc.key_channels);
    m.get("value_channels", mc.value_channels);
    m.get("max_tail", mc.max_tail);
    m.get("write_interval", mc.write_interval);
    std::string sim = mc.attention.similarity == ops::Similarity::kDot ? "dot" : "neg_l2";
    m.get("similarity", sim);
    if (sim == "dot") mc.attention.similarity = ops::Similarity::kDot;
    else if (sim == "neg_l2") mc.attention.similarity = ops::Similarity::kNegL2;
    else throw ConfigError("config key 'memory.similarity' must be 'dot' or 'neg_l2'");
    m.get("top_k", mc.attention.top_k);
    m.finish();
  }
  if (root.has("tta")) {
    Reader t = root.child("tta");
    t.get("scales", c.tta_scales);
    t.get("flip", c.tta_flip);
    t.finish();
  }
  if (root.has("train")) {
    Reader t = root.child("train");
    if (t.has("stage1")) read_stage(t.child("stage1"), c.stage1);
    if (t.has("stage2")) read_stage(t.child("stage2"), c.stage2);
    t.finish();
  }
  if (root.has("data")) {
    Reader d = root.child("data");
    std::string tr = c.train_root.string(), ev = c.eval_root.string();
    d.get("train_root", tr);
    d.get("eval_root", ev);
    c.train_root = tr;
    c.eval_root = ev;
    d.finish();
  }
  if (root.has("synth")) {
    Reader s = root.child("synth");
    SynthConfig& sc = c.synth;
    s.get("height", sc.height);
    s.get("width", sc.width);
    s.get("frames", sc.frames);
    s.get("min_objects", sc.min_objects);
    s.get("max_objects", sc.max_objects);
    if (s.has("shapes")) {
      std::vector<std::string> names;
      s.get("shapes", names);
      sc.shapes.clear();
      for (const auto& n : names) sc.shapes.push_back(shape_from_name(n));
    }
    s.get("occluder_amplitude", sc.occluder_amplitude);
    s.get("shake_amplitude", sc.shake_amplitude);
    s.get("distractors", sc.distractors);
    s.get("pixel_noise", sc.pixel_noise);
    s.get("train_clips", c.train_clips);
    s.get("eval_clips", c.eval_clips);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  const MemoryConfig& m = model.memory;
  std::vector<std::string> shapes;
  for (ShapeKind k : synth.shapes) shapes.push_back(shape_name(k));
  return {
      {"seed", seed},
      {"out", out.string()},
      {"encoder", {{"visual", encoder_json(model.visual)}, {"geometric", encoder_json(model.geometric)}}},
      {"fusion", {{"enabled", model.fusion_enabled}, {"depth", model.fusion_depth}}},
      {"memory",
       {{"key_channels", m.key_channels},
        {"value_channels", m.value_channels},
        {"max_tail", m.max_tail},
        {"write_interval", m.write_interval},
        {"similarity", m.attention.similarity == ops::Similarity::kDot ? "dot" : "neg_l2"},
        {"top_k", m.attention.top_k}}},
      {"tta", {{"scales", tta_scales}, {"flip", tta_flip}}},
      {"train", {{"stage1", stage_json(stage1)}, {"stage2", stage_json(stage2)}}},
      {"data", {{"train_root", train_root.string()}, {"eval_root", eval_root.string()}}},
      {"synth",
       {{"height", synth.height},
        {"width", synth.width},
        {"frames", synth.frames},
        {"min_objects", synth.min_objects},
        {"max_objects", synth.max_objects},
        {"shapes", shapes},
        {"occluder_amplitude", synth.occluder_amplitude},
        {"shake_amplitude", synth.shake_amplitude},
        {"distractors", synth.distractors},
        {"pixel_noise", synth.pixel_noise},
        {"train_clips", train_clips},
        {"eval_clips", eval_clips}}},
  };
}

fs::path RunConfig::resolved_train_root() const {
  return train_root.empty() ? out / "data" / "train" : train_root;
}

fs::path RunConfig::resolved_eval_root() const {
  return eval_root.empty() ? out / "data" / "eval" : eval_root;
}

std::vector<Variant> RunConfig::variants(bool tta) const {
  if (!tta) return {Variant{}};
  return make_variants(tta_scales, tta_flip);
}

StageConfig RunConfig::stage(int which) const {
  StageConfig s = which == 1 ? stage1 : stage2;
  s.stage = which;
  s.seed = seed * 1000003ULL + static_cast<std::uint64_t>(which);
  return s;
}

void RunConfig::validate() const {
  model.visual.validate();
  model.geometric.validate();
  if (model.fusion_depth < 1 || model.fusion_depth > 2) throw ConfigError("fusion.depth must be 1 or 2");
  const MemoryConfig& m = model.memory;
  if (m.key_channels < 1) throw ConfigError("memory.key_channels must be positive");
  if (m.value_channels < 1) throw ConfigError("memory.value_channels must be positive");
  if (m.max_tail < 0) throw ConfigError("memory.max_tail must be non-negative");
  if (m.write_interval < 1) throw ConfigError("memory.write_interval must be >= 1");
  if (m.attention.top_k < 0) throw ConfigError("memory.top_k must be non-negative");
  if (tta_scales.empty()) throw ConfigError("tta.scales must not be empty");
  for (double s : tta_scales)
    if (!(s >= 0.5 && s <= 2.0)) throw ConfigError("tta.scales entries must lie in [0.5, 2]");
  stage(1).validate();
  stage(2).validate();
  synth.validate();
  if (train_clips < 1 || eval_clips < 1) throw ConfigError("synth.train_clips and synth.eval_clips must be positive");
}

void write_resolved_config(const RunConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  json j = {{"config", cfg.to_json()}, {"version", version()}, {"seed", cfg.seed}};
  std::ofstream out(dir / "config.resolved.json");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write " + (dir / "config.resolved.json").string());
}

}  // namespace egovos

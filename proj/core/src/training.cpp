#include "egovos/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "egovos/errors.hpp"
#include "egovos/ops.hpp"
#include "egovos/raster.hpp"

namespace egovos {

Var segmentation_loss(const Var& probs, const MaskMap& gt) {
  const auto& s = probs.shape();
  if (s.size() != 3 || s[1] != gt.height() || s[2] != gt.width() || s[0] != gt.num_objects() + 1)
    throw ShapeError("loss: probabilities " + shape_string(s) + " do not match mask " +
                     std::to_string(gt.height()) + "x" + std::to_string(gt.width()) + " with " +
                     std::to_string(gt.num_objects()) + " objects");
  return ops::segmentation_loss(probs, gt.labels());
}

double segmentation_loss(const ProbabilityVolume& probs, const MaskMap& gt) {
  NoGradGuard no_grad;
  return segmentation_loss(Var(probs.probs()), gt).value()[0];
}

StageConfig StageConfig::stage1() { return StageConfig{}; }

StageConfig StageConfig::stage2(bool unfreeze_geometric) {
  StageConfig c;
  c.stage = 2;
  c.frozen_prefixes = unfreeze_geometric ? std::vector<std::string>{}
                                         : std::vector<std::string>{"encoder.geometric."};
  return c;
}

void StageConfig::validate() const {
  if (stage != 1 && stage != 2) throw ConfigError("train.stage must be 1 or 2");
  if (iterations < 1) throw ConfigError("train.iterations must be positive");
  if (batch_size < 1) throw ConfigError("train.batch_size must be positive");
  if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be positive");
  if (!(weight_decay >= 0)) throw ConfigError("train.weight_decay must be non-negative");
  if (n_frames < 2) throw ConfigError("train.n_frames must be >= 2");
  if (max_skip < 1) throw ConfigError("train.max_skip must be >= 1");
  if (teacher_forcing_fraction < 0 || teacher_forcing_fraction > 1)
    throw ConfigError("train.teacher_forcing_fraction must lie in [0, 1]");
  if (grad_clip < 0) throw ConfigError("train.grad_clip must be non-negative");
  if (!(min_scale >= 0.5 && max_scale <= 2.0 && min_scale <= max_scale))
    throw ConfigError("train.min_scale/max_scale must satisfy 0.5 <= min <= max <= 2");
  if (stage == 1) {
    bool covered = false;
    for (const auto& p : frozen_prefixes) covered |= p == "encoder." || p == "encoder";
    if (!covered) throw ConfigError("train.frozen_prefixes: stage 1 must freeze 'encoder.'");
  }
}

AdamW::AdamW(double learning_rate, double weight_decay, double beta1, double beta2, double eps)
    : lr_(learning_rate), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {}

void AdamW::step(ParamSet& params) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (auto& [name, var] : params) {
    if (!var.requires_grad() || !var.has_grad()) continue;
    auto [it, fresh] = moments_.try_emplace(name);
    if (fresh) {
      it->second.first = Tensor::zeros_like(var.value());
      it->second.second = Tensor::zeros_like(var.value());
    }
    Tensor& m = it->second.first;
    Tensor& v = it->second.second;
    Tensor& w = var.mutable_value();
    const Tensor& g = var.grad();
    const double decay = ParamSet::is_bias(name) ? 0.0 : lr_ * wd_;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1_ * m[i] + (1 - b1_) * g[i];
      v[i] = b2_ * v[i] + (1 - b2_) * g[i] * g[i];
      w[i] -= decay * w[i];
      w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

Var clip_loss(const Model& model, const SequenceData& seq, const std::vector<int>& indices,
              bool teacher_forcing, const Variant& aug) {
  if (indices.size() < 2) throw ConfigError("pseudo-video needs at least 2 frames");
  const bool identity = aug == Variant{};
  auto frame_at = [&](int i) {
    return identity ? seq.frames.at(i) : apply_variant(seq.frames.at(i), aug);
  };
  auto mask_at = [&](int i) {
    return identity ? seq.padded_mask(i) : apply_variant(seq.padded_mask(i), aug);
  };
  auto depth_at = [&](int i) -> std::optional<Tensor> {
    const Tensor* d = seq.depth(i);
    if (!d) return std::nullopt;
    return identity ? *d : apply_variant(*d, aug);
  };
  const int first = indices.front();
  std::optional<Tensor> d0 = depth_at(first);
  MemoryBank bank = init_from_first_frame(model, frame_at(first), d0 ? &*d0 : nullptr,
                                          mask_at(first), first);
  Var total;
  for (std::size_t k = 1; k < indices.size(); ++k) {
    const int idx = indices[k];
    const MaskMap gt = mask_at(idx);
    std::optional<Tensor> d = depth_at(idx);
    FrameForward fwd = forward_frame(model, frame_at(idx), d ? &*d : nullptr, bank);
    Var loss = segmentation_loss(fwd.probs, gt);
    total = total.defined() ? ops::add(total, loss) : loss;
    if (k + 1 < indices.size()) {
      const MaskMap written = teacher_forcing ? gt : argmax_decode(fwd.probs.value());
      bank.write(make_memory_entry(model, fwd.features, fwd.key, written, idx));
    }
  }
  return ops::scale(total, 1.0 / static_cast<double>(indices.size() - 1));
}

namespace {

void clip_gradients(ParamSet& params, double max_norm) {
  double sq = 0;
  for (auto& [name, var] : params)
    if (var.requires_grad() && var.has_grad())
      for (double g : var.grad().values()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double s = max_norm / norm;
  for (auto& [name, var] : params)
    if (var.requires_grad() && var.has_grad()) var.grad_buffer() *= s;
}

}  // namespace

std::vector<double> train_stage(Model& model, const std::vector<SequenceData>& dataset,
                                const StageConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  if (dataset.empty()) throw ConfigError("training dataset is empty");
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (static_cast<int>(dataset[i].annotated.size()) >= cfg.n_frames) usable.push_back(i);
  if (usable.empty())
    throw ConfigError("no sequence has " + std::to_string(cfg.n_frames) + " annotated frames");

  ParamSet& params = model.params();
  params.set_trainable(cfg.frozen_prefixes);
  AdamW opt(cfg.learning_rate, cfg.weight_decay);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
  const int teacher_iters =
      static_cast<int>(std::ceil(cfg.teacher_forcing_fraction * cfg.iterations));

  std::vector<double> curve;
  curve.reserve(cfg.iterations);
  for (int it = 0; it < cfg.iterations; ++it) {
    if (cfg.cosine_decay)
      opt.set_learning_rate(0.5 * cfg.learning_rate * (1 + std::cos(std::numbers::pi * it / cfg.iterations)));
    params.zero_grad();
    const bool teacher = it < teacher_iters;
    double batch_loss = 0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const SequenceData& seq = dataset[usable[pick(rng)]];
      const std::vector<int> idx = sample_pseudo_video(seq.annotated, cfg.n_frames, cfg.max_skip, rng);
      Variant aug;
      if (cfg.max_scale > cfg.min_scale)
        aug.scale = std::uniform_real_distribution<double>(cfg.min_scale, cfg.max_scale)(rng);
      if (cfg.random_flip) aug.flipped = std::bernoulli_distribution(0.5)(rng);
      Var loss = ops::scale(clip_loss(model, seq, idx, teacher, aug), 1.0 / cfg.batch_size);
      const double v = loss.value()[0];
      if (!std::isfinite(v))
        throw DivergenceError("non-finite loss at iteration " + std::to_string(it) + " of stage " +
                              std::to_string(cfg.stage));
      batch_loss += v;
      backward(loss);
    }
    if (cfg.grad_clip > 0) clip_gradients(params, cfg.grad_clip);
    opt.step(params);
    curve.push_back(batch_loss);
    if (progress) progress(it, batch_loss);
  }
  params.zero_grad();
  params.set_trainable({});
  params.round_to_float();
  return curve;
}

void write_loss_curve(const std::filesystem::path& path, const std::vector<double>& losses) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << "iteration,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, losses[i]);
    out << buf;
  }
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace egovos

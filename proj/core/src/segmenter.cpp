#include "egovos/segmenter.hpp"

#include <cmath>

#include "egovos/errors.hpp"
#include "egovos/ops.hpp"
#include "egovos/raster.hpp"

namespace egovos {

namespace {

Var conv_param(int cout, int cin, int k, std::mt19937_64& rng) {
  return Var(random_normal({cout, cin, k, k}, std::sqrt(2.0 / (cin * k * k)), rng), true);
}

Var zeros(int n) { return Var(Tensor({n}), true); }

SegmenterParams::Stage init_stage(int in, int skip_in, int out, std::mt19937_64& rng) {
  SegmenterParams::Stage s;
  s.conv1_w = conv_param(out, in, 3, rng);
  s.conv1_b = zeros(out);
  s.skip_w = Var(random_normal({out, skip_in}, std::sqrt(1.0 / skip_in), rng), true);
  s.skip_b = zeros(out);
  s.conv2_w = conv_param(out, out, 3, rng);
  s.conv2_b = zeros(out);
  return s;
}

Var run_stage(const SegmenterParams::Stage& s, const Var& x, const Var& skip) {
  Var y = ops::relu(ops::conv2d(x, s.conv1_w, s.conv1_b, 1, 1));
  const auto& ss = skip.shape();
  y = ops::resize_bilinear(y, ss[1], ss[2]);
  y = ops::add(y, ops::pointwise_linear(skip, s.skip_w, s.skip_b));
  return ops::relu(ops::conv2d(y, s.conv2_w, s.conv2_b, 1, 1));
}

}  // namespace

SegmenterParams SegmenterParams::init(const std::array<int, 3>& c, const MemoryConfig& m,
                                      std::mt19937_64& rng) {
  if (m.key_channels < 1 || m.value_channels < 1) {
    throw ConfigError("key/value channels must be >= 1");
  }
  SegmenterParams p;
  p.key_w = Var(random_normal({m.key_channels, c[2]}, std::sqrt(1.0 / c[2]), rng), true);
  p.value1_w = conv_param(m.value_channels, c[2] + 1, 3, rng);
  p.value1_b = zeros(m.value_channels);
  p.value2_w = conv_param(m.value_channels, m.value_channels, 3, rng);
  p.value2_b = zeros(m.value_channels);
  p.stage_a = init_stage(m.value_channels, c[1], c[1], rng);
  p.stage_b = init_stage(c[1], c[0], c[0], rng);
  p.head_w = Var(random_normal({1, c[0]}, std::sqrt(1.0 / c[0]), rng), true);
  p.head_b = zeros(1);
  return p;
}

void SegmenterParams::register_into(ParamSet& params) const {
  params.adopt("segmenter.key.w", key_w);
  params.adopt("segmenter.value.conv1.w", value1_w);
  params.adopt("segmenter.value.conv1.b", value1_b);
  params.adopt("segmenter.value.conv2.w", value2_w);
  params.adopt("segmenter.value.conv2.b", value2_b);
  for (const auto& [name, s] : {std::pair{"a", &stage_a}, std::pair{"b", &stage_b}}) {
    const std::string base = std::string("segmenter.decoder.") + name + ".";
    params.adopt(base + "conv1.w", s->conv1_w);
    params.adopt(base + "conv1.b", s->conv1_b);
    params.adopt(base + "skip.w", s->skip_w);
    params.adopt(base + "skip.b", s->skip_b);
    params.adopt(base + "conv2.w", s->conv2_w);
    params.adopt(base + "conv2.b", s->conv2_b);
  }
  params.adopt("segmenter.decoder.head.w", head_w);
  params.adopt("segmenter.decoder.head.b", head_b);
}

Var encode_key(const SegmenterParams& p, const Var& f_s3) {
  if (f_s3.value().rank() != 3 || f_s3.dim(0) != p.key_w.dim(1)) {
    throw ShapeError("encode_key: features " + shape_string(f_s3.shape()) +
                     " do not match key projection " + shape_string(p.key_w.shape()));
  }
  return ops::pointwise_linear(f_s3, p.key_w, Var());
}

Var encode_value(const SegmenterParams& p, const Var& f_s3, const MaskMap& mask) {
  const auto& s = f_s3.shape();
  if (s.size() != 3 || s[0] + 1 != p.value1_w.dim(1)) {
    throw ShapeError("encode_value: features " + shape_string(s) + " do not match value encoder");
  }
  if (mask.height() != s[1] * 16 || mask.width() != s[2] * 16) {
    throw ShapeError("encode_value: mask size does not match the 1/16 feature grid");
  }
  const int cv = p.value2_w.dim(0);
  const int n = mask.num_objects();
  if (n == 0) return Var(Tensor({0, cv, s[1], s[2]}));
  std::vector<Var> per_object;
  for (int obj = 1; obj <= n; ++obj) {
    Var ind(downsample_indicator(mask, obj, 16));
    Var x = ops::concat({f_s3, ind});
    x = ops::relu(ops::conv2d(x, p.value1_w, p.value1_b, 1, 1));
    x = ops::conv2d(x, p.value2_w, p.value2_b, 1, 1);
    per_object.push_back(ops::reshape(x, {1, cv, s[1], s[2]}));
  }
  return ops::concat(per_object);
}

Var decode(const SegmenterParams& p, const Var& readout, const Var& f_s2, const Var& f_s1,
           int height, int width) {
  const auto& r = readout.shape();
  if (r.size() != 4 || f_s2.value().rank() != 3 || f_s1.value().rank() != 3 ||
      f_s2.dim(1) != 2 * r[2] || f_s1.dim(1) != 4 * r[2] || height != 16 * r[2] ||
      width != 16 * r[3]) {
    throw ShapeError("decode: readout " + shape_string(r) + " and skips " +
                     shape_string(f_s2.shape()) + ", " + shape_string(f_s1.shape()) +
                     " are inconsistent");
  }
  const int n = r[0];
  if (n == 0) return Var(Tensor({0, height, width}));
  std::vector<Var> logits;
  for (int obj = 0; obj < n; ++obj) {
    Var x = ops::reshape(ops::slice(readout, obj, 1), {r[1], r[2], r[3]});
    x = run_stage(p.stage_a, x, f_s2);
    x = run_stage(p.stage_b, x, f_s1);
    x = ops::pointwise_linear(x, p.head_w, p.head_b);
    logits.push_back(ops::resize_bilinear(x, height, width));
  }
  return ops::concat(logits);
}

ProbabilityVolume soft_aggregate(const Tensor& logits) {
  NoGradGuard no_grad;
  return ProbabilityVolume(ops::soft_aggregate(Var(logits)).value());
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  std::mt19937_64 rng(seed);
  visual_.emplace(config.visual, params_, rng);
  if (config.fusion_enabled) {
    geometric_.emplace(config.geometric, params_, rng);
    FusionConfig fc{config.visual.channels, config.geometric.channels, config.fusion_depth};
    fusion_ = init_fusion(fc, rng());
    fusion_->register_into(params_);
  }
  segmenter_ = SegmenterParams::init(config.visual.channels, config.memory, rng);
  segmenter_.register_into(params_);
  params_.round_to_float();
}

FeaturePyramid Model::encode(const Frame& frame, const Tensor* depth) const {
  FeaturePyramid v = visual_->encode(frame);
  if (!fusion_) return v;
  FeaturePyramid g = geometric_->encode(frame, depth);
  return fuse_pyramids(v, g, *fusion_);
}

FrameForward forward_frame(const Model& model, const Frame& frame, const Tensor* depth,
                           const MemoryBank& bank) {
  FrameForward out;
  out.features = model.encode(frame, depth);
  const SegmenterParams& sp = model.segmenter();
  out.key = encode_key(sp, out.features.s3());
  Var readout = memory_read(out.key, bank, model.config().memory.attention);
  out.logits = decode(sp, readout, out.features.s2(), out.features.s1(), frame.height(),
                      frame.width());
  out.probs = ops::soft_aggregate(out.logits);
  return out;
}

MemoryEntry make_memory_entry(const Model& model, const FeaturePyramid& features, const Var& key,
                              const MaskMap& mask, int frame_index) {
  return {key, encode_value(model.segmenter(), features.s3(), mask), frame_index};
}

MemoryBank init_from_first_frame(const Model& model, const Frame& frame, const Tensor* depth,
                                 const MaskMap& gt, int frame_index) {
  if (gt.height() != frame.height() || gt.width() != frame.width()) {
    throw ShapeError("first-frame mask " + std::to_string(gt.height()) + "x" +
                     std::to_string(gt.width()) + " does not match frame " +
                     std::to_string(frame.height()) + "x" + std::to_string(frame.width()));
  }
  FeaturePyramid f = model.encode(frame, depth);
  Var key = encode_key(model.segmenter(), f.s3());
  MemoryBank bank(model.config().memory.max_tail);
  bank.set_permanent(make_memory_entry(model, f, key, gt, frame_index));
  return bank;
}

SegmentResult segment_frame(const Model& model, const Frame& frame, const Tensor* depth,
                            int frame_index, MemoryBank& bank, int write_interval) {
  if (write_interval < 1) throw ConfigError("write interval must be >= 1");
  NoGradGuard no_grad;
  FrameForward fwd = forward_frame(model, frame, depth, bank);
  SegmentResult out{ProbabilityVolume(fwd.probs.value()), MaskMap(), false};
  out.mask = argmax_decode(out.probs);
  if (frame_index % write_interval == 0) {
    bank.write(make_memory_entry(model, fwd.features, fwd.key, out.mask, frame_index));
    out.wrote_memory = true;
  }
  return out;
}

}  // namespace egovos

#include "egovos/encoders.hpp"

#include <cmath>

#include "egovos/archive.hpp"
#include "egovos/errors.hpp"
#include "egovos/ops.hpp"

namespace egovos {

namespace {

Tensor he_conv(int cout, int cin, int k, std::mt19937_64& rng) {
  return random_normal({cout, cin, k, k}, std::sqrt(2.0 / (cin * k * k)), rng);
}

// Loads the archive named by an external spec into the already-registered
// parameters under `prefix`.
void load_external(const EncoderSpec& spec, ParamSet& params, const std::string& prefix) {
  if (!spec.weights_ref) throw ConfigError("external encoder requires weights_ref");
  std::map<std::string, std::vector<int>> expected;
  for (const auto& [name, v] : params)
    if (ParamSet::has_prefix(name, prefix)) expected.emplace(name, v.shape());
  NamedArrays arrays = load_weight_archive(*spec.weights_ref, expected);
  for (auto& [name, t] : arrays) params.get(name).mutable_value() = std::move(t);
}

}  // namespace

std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::kToyVisual: return "toy-visual";
    case EncoderKind::kToyGeometric: return "toy-geometric";
    case EncoderKind::kExternal: return "external";
  }
  return "unknown";
}

EncoderKind encoder_kind_from_string(const std::string& name) {
  if (name == "toy-visual") return EncoderKind::kToyVisual;
  if (name == "toy-geometric") return EncoderKind::kToyGeometric;
  if (name == "external") return EncoderKind::kExternal;
  throw ConfigError("unknown encoder kind '" + name + "'");
}

void EncoderSpec::validate() const {
  for (int c : channels)
    if (c < 1) throw ConfigError("encoder channels must be >= 1");
  if (patch != 4 && patch != 8 && patch != 14 && patch != 16) {
    throw ConfigError("encoder patch must be one of 4, 8, 14, 16");
  }
  if (kind == EncoderKind::kExternal && !weights_ref) {
    throw ConfigError("external encoder requires weights_ref");
  }
}

std::pair<int, int> align_geometric_input(int height, int width, int patch_g) {
  if (height <= 0 || width <= 0 || height % 16 || width % 16) {
    throw ShapeError("align_geometric_input needs sizes that are multiples of 16, got " +
                     std::to_string(height) + "x" + std::to_string(width) + " (pad first)");
  }
  if (patch_g < 1) throw ShapeError("patch size must be positive");
  return {patch_g * (height / 16), patch_g * (width / 16)};
}

VisualEncoder::VisualEncoder(const EncoderSpec& spec, ParamSet& params, std::mt19937_64& rng)
    : spec_(spec) {
  if (spec.kind == EncoderKind::kToyGeometric) {
    throw ConfigError("visual encoder cannot be of kind toy-geometric");
  }
  spec.validate();
  int cin = 3;
  for (int s = 0; s < 3; ++s) {
    const int c = spec.channels[s];
    const std::string base = std::string(kPrefix) + "s" + std::to_string(s + 1) + ".";
    stages_[s][0] = params.add(base + "conv1.w", he_conv(c, cin, 3, rng));
    stages_[s][1] = params.add(base + "conv1.b", Tensor({c}));
    stages_[s][2] = params.add(base + "conv2.w", he_conv(c, c, 3, rng));
    stages_[s][3] = params.add(base + "conv2.b", Tensor({c}));
    cin = c;
  }
  if (spec.kind == EncoderKind::kExternal) load_external(spec, params, kPrefix);
}

FeaturePyramid VisualEncoder::encode(const Frame& frame) const {
  if (!frame.padded_for_encoders()) {
    throw ShapeError("visual encoder needs frame sizes that are multiples of 16");
  }
  Tensor centered = frame.data();
  for (double& v : centered.values()) v -= 0.5;
  Var x(std::move(centered));
  FeaturePyramid out;
  for (int s = 0; s < 3; ++s) {
    const auto& st = stages_[s];
    x = ops::relu(ops::conv2d(ops::avg_pool2(x), st[0], st[1], 1, 1, ops::Padding::kReplicate));
    if (s == 0) x = ops::avg_pool2(x);
    x = ops::relu(ops::conv2d(x, st[2], st[3], 1, 1, ops::Padding::kReplicate));
    out.levels[s] = x;
  }
  return out;
}

GeometricEncoder::GeometricEncoder(const EncoderSpec& spec, ParamSet& params,
                                   std::mt19937_64& rng)
    : spec_(spec) {
  if (spec.kind == EncoderKind::kToyVisual) {
    throw ConfigError("geometric encoder cannot be of kind toy-visual");
  }
  spec.validate();
  const int p = spec.patch;
  const int tokens = spec.channels[2];
  const std::string base = kPrefix;
  embed_w_ = params.add(base + "embed.w",
                        random_normal({tokens, 1, p, p}, std::sqrt(1.0 / (p * p)), rng));
  embed_b_ = params.add(base + "embed.b", Tensor({tokens}));
  for (int s = 0; s < 3; ++s) {
    const int c = spec.channels[s];
    const std::string name = base + "s" + std::to_string(s + 1) + ".";
    heads_[s][0] = params.add(name + "w", he_conv(c, tokens, 3, rng));
    heads_[s][1] = params.add(name + "b", Tensor({c}));
  }
  if (spec.kind == EncoderKind::kExternal) load_external(spec, params, kPrefix);
}

FeaturePyramid GeometricEncoder::encode(const Frame& frame, const Tensor* depth) const {
  if (!depth) throw ConfigError("geometric encoder requires an auxiliary depth map");
  const int h = frame.height(), w = frame.width();
  if (depth->rank() != 2 || depth->dim(0) != h || depth->dim(1) != w) {
    throw ShapeError("depth map " + shape_string(depth->shape()) + " does not match frame " +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  const auto [hg, wg] = align_geometric_input(h, w, spec_.patch);
  Var d(depth->reshaped({1, h, w}));
  d = ops::resize_bilinear(d, hg, wg);
  Var tokens = ops::conv2d(d, embed_w_, embed_b_, spec_.patch, 0);
  FeaturePyramid out;
  for (int s = 0; s < 3; ++s) {
    const int f = 4 << s;
    Var up = ops::resize_bilinear(tokens, h / f, w / f);
    out.levels[s] =
        ops::relu(ops::conv2d(up, heads_[s][0], heads_[s][1], 1, 1, ops::Padding::kReplicate));
  }
  return out;
}

}  // namespace egovos

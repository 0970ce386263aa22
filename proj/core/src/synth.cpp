#include "egovos/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "egovos/errors.hpp"
#include "egovos/image_io.hpp"
#include "egovos/raster.hpp"

namespace egovos {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;
constexpr std::array<double, 5> kDepthLevels{0.3, 0.45, 0.6, 0.75, 0.9};

struct Actor {
  int label = 0;  // 0 for distractors
  ShapeKind shape = ShapeKind::kDisk;
  double radius = 6;
  double angle = 0;
  std::array<double, 3> color{};
  double inv_depth = 0.5;
  double x0 = 0, y0 = 0, vx = 0, vy = 0;
  double amp = 0, omega = 0, phase = 0, dir_x = 1, dir_y = 0;

  std::pair<double, double> center(int t) const {
    const double s = amp * std::sin(omega * t + phase);
    return {x0 + vx * t + s * dir_x, y0 + vy * t + s * dir_y};
  }

  bool contains(double px, double py, double cx, double cy) const {
    const double dx = px - cx, dy = py - cy;
    switch (shape) {
      case ShapeKind::kDisk:
        return dx * dx + dy * dy <= radius * radius;
      case ShapeKind::kSquare:
        return std::abs(dx) <= 0.85 * radius && std::abs(dy) <= 0.85 * radius;
      case ShapeKind::kTriangle: {
        const double r = 1.1 * radius;
        std::array<double, 3> vxs{}, vys{};
        for (int k = 0; k < 3; ++k) {
          vxs[k] = r * std::cos(angle + k * kTau / 3);
          vys[k] = r * std::sin(angle + k * kTau / 3);
        }
        bool neg = false, pos = false;
        for (int k = 0; k < 3; ++k) {
          const int n = (k + 1) % 3;
          const double cross = (vxs[n] - vxs[k]) * (dy - vys[k]) - (vys[n] - vys[k]) * (dx - vxs[k]);
          neg |= cross < 0;
          pos |= cross > 0;
        }
        return !(neg && pos);
      }
    }
    return false;
  }
};

std::array<double, 3> hsv(double h, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h, 1.0) * 6.0;
  const double x = c * (1 - std::abs(std::fmod(hp, 2.0) - 1));
  std::array<double, 3> rgb{};
  switch (static_cast<int>(hp)) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  for (double& ch : rgb) ch += v - c;
  return rgb;
}

double quantize(double v, double levels) {
  return std::round(std::clamp(v, 0.0, 1.0) * levels) / levels;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

void SynthConfig::validate() const {
  if (height < 16 || width < 16) throw ConfigError("synth: resolution must be at least 16x16");
  if (frames < 2) throw ConfigError("synth: frames must be >= 2");
  if (min_objects < 1 || max_objects < min_objects || max_objects > 3)
    throw ConfigError("synth: object count must satisfy 1 <= min_objects <= max_objects <= 3");
  if (shapes.empty()) throw ConfigError("synth: empty shape set");
  if (distractors < 0 || max_objects + distractors > static_cast<int>(kDepthLevels.size()))
    throw ConfigError("synth: too many distractors");
  if (occluder_amplitude < 0 || shake_amplitude < 0 || pixel_noise < 0)
    throw ConfigError("synth: amplitudes must be non-negative");
  if (crossing && min_objects < 2) throw ConfigError("synth: crossing needs min_objects >= 2");
}

SynthClip render_clip(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
  const int H = cfg.height, W = cfg.width, T = cfg.frames;
  const double scale = std::min(H, W) / 64.0;

  const int n = std::uniform_int_distribution<int>(cfg.min_objects, cfg.max_objects)(rng);
  const std::array<double, 3> bg0{uni(0.2, 0.8), uni(0.2, 0.8), uni(0.2, 0.8)};
  const std::array<double, 3> bg1{uni(0.2, 0.8), uni(0.2, 0.8), uni(0.2, 0.8)};
  const double grad_angle = uni(0, kTau);
  const double tex_lx = uni(8, 20) * scale, tex_ly = uni(8, 20) * scale;
  const double shake_px = uni(0, kTau), shake_py = uni(0, kTau);
  const double hue0 = u01(rng);

  std::vector<Actor> actors;
  auto first_frame_ok = [&]() {
    std::vector<int> counts(n + 1, 0);
    std::vector<const Actor*> order;
    for (const auto& a : actors) order.push_back(&a);
    std::stable_sort(order.begin(), order.end(),
                     [](const Actor* a, const Actor* b) { return a->inv_depth < b->inv_depth; });
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        int label = -1, hits = 0;
        for (const Actor* a : order) {
          const auto [cx, cy] = a->center(0);
          if (a->contains(x, y, cx, cy)) {
            label = a->label;
            ++hits;
          }
        }
        if (hits > 1) return false;
        if (label > 0) ++counts[label];
      }
    for (int k = 1; k <= n; ++k)
      if (counts[k] < 15) return false;
    return true;
  };

  bool placed = false;
  for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
    actors.clear();
    std::vector<double> depths(kDepthLevels.begin(), kDepthLevels.end());
    std::shuffle(depths.begin(), depths.end(), rng);
    for (int k = 0; k < n; ++k) {
      Actor a;
      a.label = k + 1;
      a.shape = cfg.shapes[std::uniform_int_distribution<std::size_t>(0, cfg.shapes.size() - 1)(rng)];
      a.radius = uni(5.5, 9.0) * scale;
      a.angle = uni(0, kTau);
      a.color = hsv(hue0 + static_cast<double>(k) / n + uni(-0.05, 0.05), 0.75, 0.9);
      a.inv_depth = depths[k];
      const double m = a.radius + 2;
      a.x0 = uni(m, W - m);
      a.y0 = uni(m, H - m);
      a.vx = uni(-0.6, 0.6) * scale;
      a.vy = uni(-0.6, 0.6) * scale;
      if (a.x0 + a.vx * T < m || a.x0 + a.vx * T > W - m) a.vx = -a.vx;
      if (a.y0 + a.vy * T < m || a.y0 + a.vy * T > H - m) a.vy = -a.vy;
      a.amp = uni(1.0, 4.0) * scale;
      a.omega = kTau / uni(10, 30);
      a.phase = uni(0, kTau);
      const double d = uni(0, kTau);
      a.dir_x = std::cos(d);
      a.dir_y = std::sin(d);
      actors.push_back(a);
    }
    if (cfg.crossing) {
      const double row = H / 2.0;
      const double m = std::max(actors[0].radius, actors[1].radius) + 2;
      const double meet = (T - 1) / 2.0;
      actors[0].x0 = m;
      actors[1].x0 = W - m;
      for (int k = 0; k < 2; ++k) {
        actors[k].y0 = row;
        actors[k].vy = 0;
        actors[k].amp = 0;
        actors[k].vx = (W / 2.0 - actors[k].x0) / meet;
      }
    }
    for (int k = 0; k < cfg.distractors; ++k) {
      const Actor& twin = actors[std::uniform_int_distribution<int>(0, n - 1)(rng)];
      Actor a;
      a.label = 0;
      a.shape = cfg.shapes[std::uniform_int_distribution<std::size_t>(0, cfg.shapes.size() - 1)(rng)];
      a.radius = uni(5.5, 9.0) * scale;
      a.angle = uni(0, kTau);
      for (int c = 0; c < 3; ++c) a.color[c] = std::clamp(twin.color[c] + uni(-0.04, 0.04), 0.0, 1.0);
      a.inv_depth = depths[n + k];
      const bool from_left = u01(rng) < 0.5;
      a.x0 = from_left ? -a.radius : W + a.radius;
      a.vx = (from_left ? 1.0 : -1.0) * (W + 2 * a.radius) / T * uni(0.8, 1.2);
      a.y0 = twin.y0 + uni(-4, 4) * scale;
      a.vy = twin.vy;
      a.amp = cfg.occluder_amplitude * scale * uni(0.5, 1.0);
      a.omega = kTau / uni(10, 30);
      a.phase = uni(0, kTau);
      a.dir_x = 0;
      a.dir_y = 1;
      actors.push_back(a);
    }
    placed = first_frame_ok();
  }
  if (!placed) throw ConfigError("synth: cannot place the objects apart in the first frame");

  std::vector<const Actor*> order;
  for (const auto& a : actors) order.push_back(&a);
  std::stable_sort(order.begin(), order.end(),
                   [](const Actor* a, const Actor* b) { return a->inv_depth < b->inv_depth; });

  SynthClip clip;
  clip.num_objects = n;
  std::normal_distribution<double> noise(0.0, 1.0);
  const double gx = std::cos(grad_angle), gy = std::sin(grad_angle);
  for (int t = 0; t < T; ++t) {
    const double sx = cfg.shake_amplitude * scale * std::sin(0.9 * t + shake_px);
    const double sy = cfg.shake_amplitude * scale * std::sin(1.3 * t + shake_py);
    Tensor image({3, H, W});
    Tensor depth({H, W});
    MaskMap mask(H, W, n);
    std::vector<std::pair<double, double>> centers;
    for (const Actor* a : order) {
      auto [cx, cy] = a->center(t);
      centers.emplace_back(cx + sx, cy + sy);
    }
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double bx = x - sx, by = y - sy;
        const double g = std::clamp(0.5 + ((bx / W - 0.5) * gx + (by / H - 0.5) * gy), 0.0, 1.0);
        const double tex = 0.06 * std::sin(kTau * bx / tex_lx) * std::sin(kTau * by / tex_ly);
        std::array<double, 3> px{};
        for (int c = 0; c < 3; ++c) px[c] = bg0[c] + (bg1[c] - bg0[c]) * g + tex;
        double d = 0.1 + 0.15 * std::clamp(by / H, 0.0, 1.0);
        int label = 0;
        for (std::size_t k = 0; k < order.size(); ++k) {
          if (order[k]->contains(x, y, centers[k].first, centers[k].second)) {
            px = order[k]->color;
            d = order[k]->inv_depth;
            label = order[k]->label;
          }
        }
        for (int c = 0; c < 3; ++c) image.at(c, y, x) = px[c];
        depth[static_cast<std::size_t>(y) * W + x] = quantize(d, 65535.0);
        mask.set(y, x, label);
      }
    }
    for (double& v : image.storage()) v = quantize(v + cfg.pixel_noise * noise(rng), 255.0);
    clip.frames.push_back(std::move(image));
    clip.depths.push_back(std::move(depth));
    clip.masks.push_back(std::move(mask));
  }
  return clip;
}

SequenceManifest write_clip(const SynthClip& clip, const std::filesystem::path& dir,
                            const std::string& sequence) {
  SequenceManifest m;
  m.sequence = sequence;
  m.num_objects = clip.num_objects;
  m.root = dir;
  for (std::size_t t = 0; t < clip.frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.png", t);
    FrameRecord r{std::string("frames/") + name, std::string("masks/") + name,
                  std::string("depth/") + name};
    write_rgb_png(dir / r.image, clip.frames[t]);
    write_mask_png(dir / *r.mask, clip.masks[t]);
    write_depth_png(dir / *r.depth, clip.depths[t]);
    m.frames.push_back(std::move(r));
    m.annotated.push_back(static_cast<int>(t));
  }
  m.write();
  return m;
}

SequenceManifest synth_video(const SynthConfig& config, const std::filesystem::path& dir,
                             const std::string& sequence) {
  return write_clip(render_clip(config), dir, sequence);
}

SequenceData to_sequence_data(const SynthClip& clip, const std::string& sequence) {
  SequenceData out;
  out.sequence = sequence;
  out.num_objects = clip.num_objects;
  for (std::size_t t = 0; t < clip.frames.size(); ++t) {
    Frame f = pad_to_multiple(clip.frames[t], 16);
    out.depths.emplace_back(pad_reflect(clip.depths[t], f.height(), f.width()));
    out.frames.push_back(std::move(f));
    out.masks.emplace(static_cast<int>(t), clip.masks[t]);
    out.annotated.push_back(static_cast<int>(t));
  }
  return out;
}

std::vector<SynthClip> render_clips(const SynthConfig& base, int count) {
  std::vector<SynthClip> out;
  for (int i = 0; i < count; ++i) {
    SynthConfig c = base;
    c.seed = splitmix(base.seed * 0x100000001B3ULL + static_cast<std::uint64_t>(i));
    out.push_back(render_clip(c));
  }
  return out;
}

}  // namespace egovos

#include "egovos/tta.hpp"

#include <algorithm>
#include <cmath>

#include "egovos/errors.hpp"
#include "egovos/raster.hpp"

namespace egovos {

namespace {

void check_variant(const Variant& v) {
  if (!(v.scale >= 0.5 && v.scale <= 2.0)) {
    throw ConfigError("variant scale " + std::to_string(v.scale) + " outside [0.5, 2.0]");
  }
}

// 2^60: probabilities >= 2^-8 are represented exactly on this grid.
constexpr double kFixedOne = 1152921504606846976.0;

}  // namespace

std::vector<Variant> make_variants(const std::vector<double>& scales, bool flip) {
  if (scales.empty()) throw ConfigError("at least one TTA scale is required");
  std::vector<Variant> out;
  for (double s : scales) {
    out.push_back({s, false});
    if (flip) out.push_back({s, true});
  }
  for (const auto& v : out) check_variant(v);
  return out;
}

int round16(double v) { return std::max(16, static_cast<int>(std::lround(v / 16.0)) * 16); }

std::pair<int, int> variant_size(int height, int width, const Variant& v) {
  check_variant(v);
  if (v.scale == 1.0) return {height, width};
  return {round16(v.scale * height), round16(v.scale * width)};
}

Frame apply_variant(const Frame& frame, const Variant& v) {
  const auto [h, w] = variant_size(frame.height(), frame.width(), v);
  if (h == frame.height() && w == frame.width() && !v.flipped) return frame;
  Tensor data = resize_bilinear(frame.data(), h, w);
  for (double& x : data.values()) x = std::clamp(x, 0.0, 1.0);
  if (v.flipped) data = flip_horizontal(data);
  const bool same = h == frame.height() && w == frame.width();
  return Frame(std::move(data), same ? frame.orig_h() : h, same ? frame.orig_w() : w);
}

Tensor apply_variant(const Tensor& depth, const Variant& v) {
  if (depth.rank() != 2) throw ShapeError("depth map must be [H,W]");
  const auto [h, w] = variant_size(depth.dim(0), depth.dim(1), v);
  Tensor out = resize_bilinear(depth, h, w);
  return v.flipped ? flip_horizontal(out) : out;
}

MaskMap apply_variant(const MaskMap& mask, const Variant& v) {
  const auto [h, w] = variant_size(mask.height(), mask.width(), v);
  MaskMap out = (h == mask.height() && w == mask.width()) ? mask : resize_nearest(mask, h, w);
  return v.flipped ? flip_horizontal(out) : out;
}

ProbabilityVolume invert_probability(const ProbabilityVolume& p, const Variant& v, int height,
                                     int width) {
  check_variant(v);
  Tensor t = v.flipped ? flip_horizontal(p.probs()) : p.probs();
  if (t.dim(1) == height && t.dim(2) == width) return ProbabilityVolume(std::move(t));
  t = resize_bilinear(t, height, width);
  const int c = t.dim(0);
  const std::size_t px = static_cast<std::size_t>(height) * width;
  for (std::size_t q = 0; q < px; ++q) {
    double s = 0;
    for (int k = 0; k < c; ++k) {
      double& x = t[k * px + q];
      x = std::max(0.0, x);
      s += x;
    }
    for (int k = 0; k < c; ++k) t[k * px + q] = s > 0 ? t[k * px + q] / s : (k == 0 ? 1.0 : 0.0);
  }
  return ProbabilityVolume(std::move(t));
}

EnsembleResult ensemble(const std::vector<ProbabilityVolume>& volumes) {
  if (volumes.empty()) throw ShapeError("ensemble needs at least one volume");
  const auto& shape = volumes[0].probs().shape();
  for (const auto& v : volumes) {
    if (v.probs().shape() != shape) {
      throw ShapeError("ensemble inputs differ in shape: " + shape_string(v.probs().shape()) +
                       " vs " + shape_string(shape));
    }
  }
  const std::size_t n = volumes[0].probs().size();
  std::vector<__int128> acc(n, 0);
  for (const auto& v : volumes) {
    const Tensor& t = v.probs();
    for (std::size_t i = 0; i < n; ++i)
      acc[i] += static_cast<__int128>(std::llround(t[i] * kFixedOne));
  }

  const int c = shape[0], h = shape[1], w = shape[2];
  const std::size_t px = static_cast<std::size_t>(h) * w;
  std::vector<int> labels(px, 0);
  for (std::size_t q = 0; q < px; ++q) {
    int best = 0;
    for (int k = 1; k < c; ++k)
      if (acc[k * px + q] > acc[best * px + q]) best = k;
    labels[q] = best;
  }

  Tensor mean(shape);
  const double count = static_cast<double>(volumes.size());
  for (std::size_t i = 0; i < n; ++i) mean[i] = static_cast<double>(acc[i]) / kFixedOne / count;
  return {ProbabilityVolume(std::move(mean)), MaskMap(h, w, c - 1, std::move(labels))};
}

}  // namespace egovos

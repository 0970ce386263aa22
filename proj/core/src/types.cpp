#include "egovos/types.hpp"

#include <algorithm>
#include <cmath>

#include "egovos/errors.hpp"

namespace egovos {

Frame::Frame(Tensor data, int orig_h, int orig_w)
    : data_(std::move(data)), orig_h_(orig_h), orig_w_(orig_w) {
  if (data_.rank() != 3 || data_.dim(0) != 3) {
    throw ShapeError("frame must be [3,H,W], got " + shape_string(data_.shape()));
  }
  if (orig_h <= 0 || orig_w <= 0 || orig_h > height() || orig_w > width()) {
    throw ShapeError("frame original size exceeds padded size");
  }
  for (double v : data_.values()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw ShapeError("frame values must lie in [0,1]");
  }
}

MaskMap::MaskMap(int height, int width, int num_objects)
    : height_(height),
      width_(width),
      num_objects_(num_objects),
      labels_(static_cast<std::size_t>(height) * width, 0) {
  if (height < 0 || width < 0 || num_objects < 0) throw ShapeError("negative mask dimensions");
}

MaskMap::MaskMap(int height, int width, int num_objects, std::vector<int> labels)
    : height_(height), width_(width), num_objects_(num_objects), labels_(std::move(labels)) {
  if (labels_.size() != static_cast<std::size_t>(height) * width) {
    throw ShapeError("mask label count does not match " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  for (int l : labels_) {
    if (l < 0 || l > num_objects) {
      throw ShapeError("mask label " + std::to_string(l) + " outside [0," +
                       std::to_string(num_objects) + "]");
    }
  }
}

void MaskMap::set(int y, int x, int label) {
  if (label < 0 || label > num_objects_) throw ShapeError("mask label out of range");
  labels_[static_cast<std::size_t>(y) * width_ + x] = label;
}

std::size_t MaskMap::count(int label) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

ProbabilityVolume::ProbabilityVolume(Tensor probs) : probs_(std::move(probs)) {
  if (probs_.rank() != 3 || probs_.dim(0) < 1) {
    throw ShapeError("probability volume must be [(N+1),H,W], got " + shape_string(probs_.shape()));
  }
  for (double v : probs_.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ShapeError("probability outside [0,1]");
  }
  if (max_sum_error() > kSumTolerance) throw ShapeError("probability channels do not sum to 1");
}

double ProbabilityVolume::max_sum_error() const {
  const int c = probs_.dim(0);
  const std::size_t px = probs_.size() / c;
  double worst = 0;
  for (std::size_t p = 0; p < px; ++p) {
    double s = 0;
    for (int k = 0; k < c; ++k) s += probs_[k * px + p];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

std::array<int, 3> FeaturePyramid::channels() const {
  return {levels[0].dim(0), levels[1].dim(0), levels[2].dim(0)};
}

void FeaturePyramid::check_against(int height, int width) const {
  for (int i = 0; i < 3; ++i) {
    const int f = 4 << i;
    const auto& s = levels[i].shape();
    if (s.size() != 3 || s[1] != height / f || s[2] != width / f) {
      throw ShapeError("pyramid level " + std::to_string(i + 1) + " has shape " + shape_string(s) +
                       ", expected spatial " + std::to_string(height / f) + "x" +
                       std::to_string(width / f));
    }
  }
}

}  // namespace egovos

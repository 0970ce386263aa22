#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "egovos/autograd.hpp"
#include "egovos/tensor.hpp"

namespace egovos {

/// Normalized RGB frame [3, H, W] with values in [0, 1]. `orig_h`/`orig_w`
/// record the size before bottom/right padding.
class Frame {
 public:
  Frame() = default;
  Frame(Tensor data, int orig_h, int orig_w);

  const Tensor& data() const noexcept { return data_; }
  int height() const noexcept { return data_.shape()[1]; }
  int width() const noexcept { return data_.shape()[2]; }
  int orig_h() const noexcept { return orig_h_; }
  int orig_w() const noexcept { return orig_w_; }
  /// True when H and W are multiples of 16 (what the encoders require).
  bool padded_for_encoders() const noexcept { return height() % 16 == 0 && width() % 16 == 0; }

 private:
  Tensor data_;
  int orig_h_ = 0;
  int orig_w_ = 0;
};

/// Per-pixel object ids in {0..num_objects}; 0 is background.
class MaskMap {
 public:
  MaskMap() = default;
  MaskMap(int height, int width, int num_objects);
  MaskMap(int height, int width, int num_objects, std::vector<int> labels);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int num_objects() const noexcept { return num_objects_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  int at(int y, int x) const noexcept { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int y, int x, int label);
  std::size_t count(int label) const;

  friend bool operator==(const MaskMap&, const MaskMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int num_objects_ = 0;
  std::vector<int> labels_;
};

/// Distribution over background + N objects per pixel: [(N+1), H, W].
class ProbabilityVolume {
 public:
  static constexpr double kSumTolerance = 1e-5;

  ProbabilityVolume() = default;
  /// Validates entries in [0,1] and unit channel sums.
  explicit ProbabilityVolume(Tensor probs);

  const Tensor& probs() const noexcept { return probs_; }
  int num_objects() const noexcept { return probs_.shape()[0] - 1; }
  int height() const noexcept { return probs_.shape()[1]; }
  int width() const noexcept { return probs_.shape()[2]; }
  /// Largest |sum_c p(c) - 1| over pixels.
  double max_sum_error() const;

 private:
  Tensor probs_;
};

/// Feature maps at 1/4, 1/8 and 1/16 of the padded frame size.
struct FeaturePyramid {
  std::array<Var, 3> levels;

  const Var& s1() const { return levels[0]; }
  const Var& s2() const { return levels[1]; }
  const Var& s3() const { return levels[2]; }
  std::array<int, 3> channels() const;
  /// Throws ShapeError unless level i is exactly (H / 2^(i+2)) x (W / 2^(i+2)).
  void check_against(int height, int width) const;
};

}  // namespace egovos

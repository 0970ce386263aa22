#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "egovos/autograd.hpp"
#include "egovos/dataset.hpp"
#include "egovos/params.hpp"
#include "egovos/segmenter.hpp"
#include "egovos/tta.hpp"
#include "egovos/types.hpp"

namespace egovos {

/// Differentiable loss of a probability volume [(N+1), H, W] against a mask.
Var segmentation_loss(const Var& probs, const MaskMap& gt);
double segmentation_loss(const ProbabilityVolume& probs, const MaskMap& gt);

struct StageConfig {
  int stage = 1;
  int iterations = 2000;
  int batch_size = 4;
  double learning_rate = 5e-5;
  double weight_decay = 0.5;
  std::vector<std::string> frozen_prefixes{"encoder."};
  int n_frames = 3;
  int max_skip = 1;
  std::uint64_t seed = 0;
  /// Fraction of iterations whose memory writes use ground-truth masks.
  double teacher_forcing_fraction = 0.5;
  /// Global gradient-norm clip; 0 disables.
  double grad_clip = 0.0;
  /// Each pseudo-video is rescaled by a factor drawn uniformly from this range
  /// and, with `random_flip`, mirrored with probability 1/2.
  double min_scale = 1.0;
  double max_scale = 1.0;
  bool random_flip = false;
  /// Cosine decay of the learning rate to zero over the stage.
  bool cosine_decay = false;

  static StageConfig stage1();
  /// Everything trains except the geometric encoder unless `unfreeze_geometric`.
  static StageConfig stage2(bool unfreeze_geometric = false);
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Adam moments with decoupled weight decay applied to non-bias parameters.
class AdamW {
 public:
  AdamW(double learning_rate, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8);

  /// One update of every trainable parameter that received a gradient.
  void step(ParamSet& params);
  long steps() const { return t_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_, wd_, b1_, b2_, eps_;
  long t_ = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments_;
};

/// Mean loss over the predicted frames of one pseudo-video. The first frame's
/// ground truth initializes memory; each later frame is written back with the
/// ground truth when `teacher_forcing`, else with its own argmax. `aug` is
/// applied to frames, depth and masks alike.
Var clip_loss(const Model& model, const SequenceData& seq, const std::vector<int>& indices,
              bool teacher_forcing, const Variant& aug = {});

using ProgressFn = std::function<void(int iteration, double loss)>;

/// Runs one stage in place and returns the per-iteration mean batch loss.
/// Frozen parameters are never touched. On exit all parameters are rounded to
/// float32 so a saved checkpoint reproduces the in-memory model exactly.
std::vector<double> train_stage(Model& model, const std::vector<SequenceData>& dataset,
                                const StageConfig& cfg, const ProgressFn& progress = {});

/// CSV with header `iteration,loss`.
void write_loss_curve(const std::filesystem::path& path, const std::vector<double>& losses);

}  // namespace egovos

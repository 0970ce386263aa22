#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>

#include "egovos/encoders.hpp"
#include "egovos/fusion.hpp"
#include "egovos/memory.hpp"
#include "egovos/params.hpp"
#include "egovos/types.hpp"

namespace egovos {

struct MemoryConfig {
  int key_channels = 64;
  int value_channels = 128;
  int max_tail = 7;
  int write_interval = 5;
  ops::AttentionOptions attention;
};

/// Key projection, mask-conditioned value encoder and the two-stage
/// skip-connected decoder. Registered under `segmenter.*`.
struct SegmenterParams {
  struct Stage {
    Var conv1_w, conv1_b, skip_w, skip_b, conv2_w, conv2_b;
  };
  Var key_w;  // [Ck, C3]
  Var value1_w, value1_b, value2_w, value2_b;
  Stage stage_a;  // 1/16 -> 1/8
  Stage stage_b;  // 1/8 -> 1/4
  Var head_w, head_b;

  /// `feature_channels` are the (fused) pyramid channels (C1, C2, C3).
  static SegmenterParams init(const std::array<int, 3>& feature_channels,
                              const MemoryConfig& memory, std::mt19937_64& rng);
  void register_into(ParamSet& params) const;
};

/// Linear channel projection of the 1/16 features: [Ck, h, w].
Var encode_key(const SegmenterParams& p, const Var& f_s3);

/// Per-object values [N, Cv, h, w] from the 1/16 features and the object's
/// indicator at 1/16 (a cell is on if any of its pixels belongs to the object).
Var encode_value(const SegmenterParams& p, const Var& f_s3, const MaskMap& mask);

/// Per-object logits [N, H, W]; objects share weights.
Var decode(const SegmenterParams& p, const Var& readout, const Var& f_s2, const Var& f_s1,
           int height, int width);

/// Non-differentiable form of ops::soft_aggregate.
ProbabilityVolume soft_aggregate(const Tensor& logits);

struct ModelConfig {
  EncoderSpec visual = EncoderSpec::visual_default();
  EncoderSpec geometric = EncoderSpec::geometric_default();
  bool fusion_enabled = true;
  int fusion_depth = 2;
  MemoryConfig memory;
};

/// Encoders, fusion and segmenter sharing one ParamSet. Not copyable: the
/// modules hold handles into the parameter nodes.
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  /// Fused pyramid (visual-only when fusion is disabled).
  FeaturePyramid encode(const Frame& frame, const Tensor* depth) const;

  const ModelConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  const SegmenterParams& segmenter() const { return segmenter_; }
  bool uses_depth() const { return geometric_.has_value(); }

 private:
  ModelConfig config_;
  ParamSet params_;
  std::optional<VisualEncoder> visual_;
  std::optional<GeometricEncoder> geometric_;
  std::optional<FusionParams> fusion_;
  SegmenterParams segmenter_;
};

/// Differentiable single-frame pass against a bank (no memory write).
struct FrameForward {
  FeaturePyramid features;
  Var key;
  Var logits;
  Var probs;
};
FrameForward forward_frame(const Model& model, const Frame& frame, const Tensor* depth,
                           const MemoryBank& bank);

/// Memory entry built from already-computed features and a mask.
MemoryEntry make_memory_entry(const Model& model, const FeaturePyramid& features, const Var& key,
                              const MaskMap& mask, int frame_index);

/// Bank whose permanent slot holds the annotated frame's key and values.
MemoryBank init_from_first_frame(const Model& model, const Frame& frame, const Tensor* depth,
                                 const MaskMap& gt, int frame_index = 0);

struct SegmentResult {
  ProbabilityVolume probs;
  MaskMap mask;
  bool wrote_memory = false;
};

/// encode -> fuse -> read -> decode -> aggregate -> argmax, then writes the
/// predicted mask to memory iff frame_index % write_interval == 0.
SegmentResult segment_frame(const Model& model, const Frame& frame, const Tensor* depth,
                            int frame_index, MemoryBank& bank, int write_interval);

}  // namespace egovos

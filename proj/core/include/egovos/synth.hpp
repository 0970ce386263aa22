#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "egovos/dataset.hpp"
#include "egovos/tensor.hpp"
#include "egovos/types.hpp"

namespace egovos {

enum class ShapeKind { kDisk, kSquare, kTriangle };

struct SynthConfig {
  int height = 64;
  int width = 64;
  int frames = 24;
  int min_objects = 1;
  int max_objects = 3;
  std::vector<ShapeKind> shapes{ShapeKind::kDisk, ShapeKind::kSquare, ShapeKind::kTriangle};
  /// Sinusoidal amplitude (pixels) of the distractor's path.
  double occluder_amplitude = 10.0;
  /// Global image jitter (pixels).
  double shake_amplitude = 1.5;
  /// Non-target shapes coloured like a target but at a different depth.
  int distractors = 1;
  double pixel_noise = 0.02;
  /// Objects 1 and 2 travel towards each other along one row and cross mid-clip.
  bool crossing = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Rendered clip. Frames are quantized to k/255 and depth to k/65535, so a
/// save/load round trip is lossless.
struct SynthClip {
  int num_objects = 0;
  std::vector<Tensor> frames;   // [3, H, W]
  std::vector<MaskMap> masks;   // every frame annotated
  std::vector<Tensor> depths;   // [H, W] inverse depth, nearer is larger
};

SynthClip render_clip(const SynthConfig& config);

/// Writes frames/, masks/, depth/ and manifest.json into `dir`.
SequenceManifest write_clip(const SynthClip& clip, const std::filesystem::path& dir,
                            const std::string& sequence);

/// render_clip + write_clip.
SequenceManifest synth_video(const SynthConfig& config, const std::filesystem::path& dir,
                             const std::string& sequence);

/// In-memory equivalent of loading a written clip.
SequenceData to_sequence_data(const SynthClip& clip, const std::string& sequence);

/// `count` clips with seeds derived from `base.seed`.
std::vector<SynthClip> render_clips(const SynthConfig& base, int count);

}  // namespace egovos

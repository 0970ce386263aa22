#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "egovos/tensor.hpp"
#include "egovos/types.hpp"

namespace egovos {

struct FrameRecord {
  std::string image;
  std::optional<std::string> mask;
  std::optional<std::string> depth;
};

/// One sequence; paths are relative to the manifest's directory.
struct SequenceManifest {
  std::string sequence;
  int num_objects = 0;
  std::vector<FrameRecord> frames;
  std::vector<int> annotated;
  std::filesystem::path root;

  /// Throws ConfigError naming the offending field or frame.
  void validate() const;
  nlohmann::json to_json() const;
  static SequenceManifest from_json(const nlohmann::json& j, std::filesystem::path root);

  static SequenceManifest read(const std::filesystem::path& manifest_path);
  /// Writes `root / "manifest.json"`.
  void write() const;
};

/// Manifests below `root`: `root/manifest.json` itself, or every
/// `root/*/manifest.json`, sorted by directory name.
std::vector<SequenceManifest> discover_manifests(const std::filesystem::path& root);

/// Loaded sequence: frames padded to multiples of 16, depths padded alike,
/// masks kept at the original size.
struct SequenceData {
  std::string sequence;
  int num_objects = 0;
  std::vector<Frame> frames;
  std::vector<std::optional<Tensor>> depths;
  std::map<int, MaskMap> masks;
  std::vector<int> annotated;

  int orig_h() const { return frames.front().orig_h(); }
  int orig_w() const { return frames.front().orig_w(); }
  const Tensor* depth(int index) const;
  /// Annotated mask mirror-padded to the frame size.
  MaskMap padded_mask(int index) const;
};

SequenceData load_sequence(const SequenceManifest& manifest);
std::vector<SequenceData> load_dataset(const std::filesystem::path& root);

/// Frame indices of a pseudo-video: a uniform start position in `annotated`,
/// then positional gaps drawn uniformly from {1..max_skip}.
std::vector<int> sample_pseudo_video(const std::vector<int>& annotated, int n_frames,
                                     int max_skip, std::mt19937_64& rng);

}  // namespace egovos

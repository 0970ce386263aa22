#include "egovos/dataset.hpp"

#include <algorithm>
#include <fstream>

#include "egovos/errors.hpp"
#include "egovos/image_io.hpp"
#include "egovos/raster.hpp"

namespace egovos {

namespace fs = std::filesystem;
using nlohmann::json;

void SequenceManifest::validate() const {
  if (sequence.empty()) throw ConfigError("manifest: empty sequence id");
  if (num_objects < 0) throw ConfigError("manifest " + sequence + ": num_objects must be >= 0");
  if (frames.empty()) throw ConfigError("manifest " + sequence + ": no frames");
  if (annotated.empty()) throw ConfigError("manifest " + sequence + ": no annotated frames");
  for (std::size_t i = 0; i < annotated.size(); ++i) {
    const int a = annotated[i];
    if (a < 0 || a >= static_cast<int>(frames.size()))
      throw ConfigError("manifest " + sequence + ": annotated index " + std::to_string(a) +
                        " out of range");
    if (i > 0 && a <= annotated[i - 1])
      throw ConfigError("manifest " + sequence + ": annotated indices must be strictly increasing");
    if (!frames[a].mask)
      throw ConfigError("manifest " + sequence + ": annotated frame " + std::to_string(a) +
                        " has no mask");
  }
}

json SequenceManifest::to_json() const {
  json fr = json::array();
  for (const auto& f : frames) {
    json e = {{"image", f.image}};
    if (f.mask) e["mask"] = *f.mask;
    if (f.depth) e["depth"] = *f.depth;
    fr.push_back(std::move(e));
  }
  return {{"sequence", sequence}, {"num_objects", num_objects}, {"annotated", annotated},
          {"frames", std::move(fr)}};
}

SequenceManifest SequenceManifest::from_json(const json& j, fs::path root) {
  SequenceManifest m;
  m.root = std::move(root);
  try {
    for (const auto& [key, _] : j.items()) {
      if (key != "sequence" && key != "num_objects" && key != "annotated" && key != "frames")
        throw ConfigError("manifest: unknown key '" + key + "'");
    }
    m.sequence = j.at("sequence").get<std::string>();
    m.num_objects = j.at("num_objects").get<int>();
    m.annotated = j.at("annotated").get<std::vector<int>>();
    for (const auto& e : j.at("frames")) {
      FrameRecord r;
      r.image = e.at("image").get<std::string>();
      if (e.contains("mask") && !e["mask"].is_null()) r.mask = e["mask"].get<std::string>();
      if (e.contains("depth") && !e["depth"].is_null()) r.depth = e["depth"].get<std::string>();
      m.frames.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

SequenceManifest SequenceManifest::read(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("manifest " + manifest_path.string() + ": " + e.what());
  }
  return from_json(j, manifest_path.parent_path());
}

void SequenceManifest::write() const {
  validate();
  fs::create_directories(root);
  std::ofstream out(root / "manifest.json");
  out << to_json().dump(2) << "\n";
  if (!out) throw IoError("cannot write manifest in " + root.string());
}

std::vector<SequenceManifest> discover_manifests(const fs::path& root) {
  if (fs::is_regular_file(root)) return {SequenceManifest::read(root)};
  if (fs::is_regular_file(root / "manifest.json")) return {SequenceManifest::read(root / "manifest.json")};
  if (!fs::is_directory(root)) throw IoError("dataset root not found: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::is_regular_file(e.path() / "manifest.json")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw IoError("no manifests below " + root.string());
  std::vector<SequenceManifest> out;
  for (const auto& d : dirs) out.push_back(SequenceManifest::read(d / "manifest.json"));
  return out;
}

const Tensor* SequenceData::depth(int index) const {
  const auto& d = depths.at(index);
  return d ? &*d : nullptr;
}

MaskMap SequenceData::padded_mask(int index) const {
  const Frame& f = frames.at(index);
  return pad_reflect(masks.at(index), f.height(), f.width());
}

SequenceData load_sequence(const SequenceManifest& manifest) {
  manifest.validate();
  SequenceData out;
  out.sequence = manifest.sequence;
  out.num_objects = manifest.num_objects;
  out.annotated = manifest.annotated;
  int h = -1, w = -1;
  for (std::size_t i = 0; i < manifest.frames.size(); ++i) {
    const FrameRecord& r = manifest.frames[i];
    const std::string where = manifest.sequence + " frame " + std::to_string(i);
    Tensor image = read_rgb_png(manifest.root / r.image);
    if (h < 0) {
      h = image.dim(1);
      w = image.dim(2);
    } else if (image.dim(1) != h || image.dim(2) != w) {
      throw ShapeError(where + ": image size differs from the first frame");
    }
    Frame frame = pad_to_multiple(image, 16);
    if (r.mask) {
      MaskMap m = read_mask_png(manifest.root / *r.mask, manifest.num_objects);
      if (m.height() != h || m.width() != w)
        throw ShapeError(where + ": mask size " + std::to_string(m.height()) + "x" +
                         std::to_string(m.width()) + " differs from image size");
      out.masks.emplace(static_cast<int>(i), std::move(m));
    }
    if (r.depth) {
      Tensor d = read_depth_png(manifest.root / *r.depth);
      if (d.dim(0) != h || d.dim(1) != w) throw ShapeError(where + ": depth size differs from image size");
      out.depths.emplace_back(pad_reflect(d, frame.height(), frame.width()));
    } else {
      out.depths.emplace_back(std::nullopt);
    }
    out.frames.push_back(std::move(frame));
  }
  return out;
}

std::vector<SequenceData> load_dataset(const fs::path& root) {
  std::vector<SequenceData> out;
  for (const auto& m : discover_manifests(root)) out.push_back(load_sequence(m));
  return out;
}

std::vector<int> sample_pseudo_video(const std::vector<int>& annotated, int n_frames,
                                     int max_skip, std::mt19937_64& rng) {
  if (n_frames < 2) throw ConfigError("pseudo-video needs n_frames >= 2");
  if (max_skip < 1) throw ConfigError("max_skip must be >= 1");
  const int count = static_cast<int>(annotated.size());
  if (count < n_frames)
    throw ConfigError("need at least " + std::to_string(n_frames) + " annotated frames, have " +
                      std::to_string(count));
  // Any start with at least n_frames-1 positions after it admits gaps of 1.
  std::uniform_int_distribution<int> start_dist(0, count - n_frames);
  int pos = start_dist(rng);
  std::vector<int> out{annotated[pos]};
  for (int k = 1; k < n_frames; ++k) {
    const int remaining = n_frames - 1 - k;
    const int room = count - 1 - pos - remaining;
    std::uniform_int_distribution<int> gap_dist(1, std::min(max_skip, room));
    pos += gap_dist(rng);
    out.push_back(annotated[pos]);
  }
  return out;
}

}  // namespace egovos

#include "egovos/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "egovos/errors.hpp"

namespace egovos {

namespace {

constexpr const char* kDataFile = "weights.bin";

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

}  // namespace

void save_weight_archive(const std::filesystem::path& dir, const NamedArrays& arrays) {
  std::filesystem::create_directories(dir);
  std::ofstream data(dir / kDataFile, std::ios::binary | std::ios::trunc);
  if (!data) throw IoError("cannot write " + (dir / kDataFile).string());
  nlohmann::json index = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : arrays) {
    std::vector<std::uint32_t> words(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const float f = static_cast<float>(t[i]);
      words[i] = to_little_endian(std::bit_cast<std::uint32_t>(f));
    }
    const std::uint64_t len = words.size() * sizeof(std::uint32_t);
    data.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(len));
    index[name] = {{"dtype", "f32"},
                   {"shape", t.shape()},
                   {"file", kDataFile},
                   {"byte_offset", offset},
                   {"byte_len", len}};
    offset += len;
  }
  if (!data) throw IoError("short write to " + (dir / kDataFile).string());
  std::ofstream idx(dir / "index.json", std::ios::trunc);
  if (!idx) throw IoError("cannot write " + (dir / "index.json").string());
  idx << index.dump(1) << '\n';
}

NamedArrays read_weight_archive(const std::filesystem::path& dir) {
  std::ifstream idx(dir / "index.json");
  if (!idx) throw LoadError("weight archive index not found: " + (dir / "index.json").string());
  nlohmann::json index;
  try {
    idx >> index;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("corrupt weight archive index: " + std::string(e.what()));
  }
  if (!index.is_object()) throw LoadError("corrupt weight archive index: not an object");

  NamedArrays out;
  std::map<std::string, std::vector<char>> blobs;
  for (const auto& [name, entry] : index.items()) {
    std::vector<int> shape;
    std::string file;
    std::uint64_t offset = 0, len = 0;
    try {
      if (entry.at("dtype").get<std::string>() != "f32") {
        throw LoadError("unsupported dtype for " + name);
      }
      shape = entry.at("shape").get<std::vector<int>>();
      file = entry.at("file").get<std::string>();
      offset = entry.at("byte_offset").get<std::uint64_t>();
      len = entry.at("byte_len").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw LoadError("corrupt index entry for " + name + ": " + e.what());
    }
    if (file.find('/') != std::string::npos || file.find('\\') != std::string::npos) {
      throw LoadError("index entry for " + name + " points outside the archive");
    }
    const std::size_t count = shape_size(shape);
    if (len != count * sizeof(float)) {
      throw LoadError("byte length of " + name + " does not match shape " + shape_string(shape));
    }
    auto blob = blobs.find(file);
    if (blob == blobs.end()) {
      std::ifstream in(dir / file, std::ios::binary);
      if (!in) throw LoadError("weight data file missing: " + (dir / file).string());
      std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      blob = blobs.emplace(file, std::move(bytes)).first;
    }
    if (offset + len > blob->second.size()) {
      throw LoadError("integrity error: data for " + name + " extends past the end of " + file +
                      " (truncated archive)");
    }
    Tensor t(shape);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t w;
      std::memcpy(&w, blob->second.data() + offset + i * sizeof(w), sizeof(w));
      t[i] = static_cast<double>(std::bit_cast<float>(to_little_endian(w)));
    }
    out.emplace(name, std::move(t));
  }
  return out;
}

NamedArrays load_weight_archive(const std::filesystem::path& dir,
                                const std::map<std::string, std::vector<int>>& expected) {
  NamedArrays arrays = read_weight_archive(dir);
  for (const auto& [name, t] : arrays) {
    auto it = expected.find(name);
    if (it == expected.end()) throw LoadError("unknown array in weight archive: " + name);
    if (it->second != t.shape()) {
      throw LoadError("shape mismatch for " + name + ": archive " + shape_string(t.shape()) +
                      ", expected " + shape_string(it->second));
    }
  }
  for (const auto& [name, _] : expected) {
    if (!arrays.count(name)) throw LoadError("weight archive is missing array " + name);
  }
  return arrays;
}

}  // namespace egovos

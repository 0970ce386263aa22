#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "egovos/params.hpp"

namespace egovos {

/// Directory layout: `index.json` maps each array name to
/// {dtype: "f32", shape, file, byte_offset, byte_len}; the data lives in
/// little-endian float32 blobs next to it, channel-major.
void save_weight_archive(const std::filesystem::path& dir, const NamedArrays& arrays);

/// Reads every array listed in the index, verifying sizes against the data file.
NamedArrays read_weight_archive(const std::filesystem::path& dir);

/// Reads and validates against `expected`: missing names, unknown names and
/// shape mismatches are LoadErrors naming the offending array.
NamedArrays load_weight_archive(const std::filesystem::path& dir,
                                const std::map<std::string, std::vector<int>>& expected);

}  // namespace egovos

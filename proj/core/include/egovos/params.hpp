#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "egovos/autograd.hpp"

namespace egovos {

using NamedArrays = std::map<std::string, Tensor>;

/// Named trainable parameters. Names are dotted paths, e.g.
/// `fusion.s1.w1`; the last component starting with 'b' marks a bias.
class ParamSet {
 public:
  Var& add(const std::string& name, Tensor init);
  /// Registers an existing leaf, sharing its node.
  Var& adopt(const std::string& name, Var leaf);
  const Var& get(const std::string& name) const;
  Var& get(const std::string& name);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::vector<std::string> names() const;
  std::size_t size() const { return params_.size(); }
  std::size_t num_scalars() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  /// Marks every parameter trainable except those under a frozen prefix.
  void set_trainable(const std::vector<std::string>& frozen_prefixes);
  void zero_grad();

  NamedArrays to_arrays() const;
  std::map<std::string, std::vector<int>> expected_shapes() const;
  /// Replaces values; names and shapes must match exactly.
  void assign(const NamedArrays& arrays);
  /// Rounds every value to the nearest float32 (the archive precision).
  void round_to_float();
  /// Order-sensitive FNV-1a hash over names and raw value bits.
  std::uint64_t fingerprint(const std::string& prefix = "") const;

  static bool is_bias(const std::string& name);
  static bool has_prefix(const std::string& name, const std::string& prefix);

 private:
  std::map<std::string, Var> params_;
};

/// Zero-mean normal entries with standard deviation `stddev`.
Tensor random_normal(std::vector<int> shape, double stddev, std::mt19937_64& rng);

}  // namespace egovos

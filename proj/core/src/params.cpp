#include "egovos/params.hpp"

#include <bit>
#include <cstring>

#include "egovos/errors.hpp"

namespace egovos {

Var& ParamSet::add(const std::string& name, Tensor init) {
  if (contains(name)) throw ConfigError("duplicate parameter name " + name);
  return params_.emplace(name, Var(std::move(init), true)).first->second;
}

Var& ParamSet::adopt(const std::string& name, Var leaf) {
  if (contains(name)) throw ConfigError("duplicate parameter name " + name);
  leaf.set_requires_grad(true);
  return params_.emplace(name, std::move(leaf)).first->second;
}

const Var& ParamSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

Var& ParamSet::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

std::size_t ParamSet::num_scalars() const {
  std::size_t n = 0;
  for (const auto& [_, v] : params_) n += v.value().size();
  return n;
}

bool ParamSet::has_prefix(const std::string& name, const std::string& prefix) {
  return name.compare(0, prefix.size(), prefix) == 0;
}

bool ParamSet::is_bias(const std::string& name) {
  const auto dot = name.rfind('.');
  const std::string leaf = dot == std::string::npos ? name : name.substr(dot + 1);
  return !leaf.empty() && leaf[0] == 'b';
}

void ParamSet::set_trainable(const std::vector<std::string>& frozen_prefixes) {
  for (auto& [name, v] : params_) {
    bool frozen = false;
    for (const auto& p : frozen_prefixes) frozen = frozen || has_prefix(name, p);
    v.set_requires_grad(!frozen);
  }
}

void ParamSet::zero_grad() {
  for (auto& [_, v] : params_) v.zero_grad();
}

NamedArrays ParamSet::to_arrays() const {
  NamedArrays out;
  for (const auto& [name, v] : params_) out.emplace(name, v.value());
  return out;
}

std::map<std::string, std::vector<int>> ParamSet::expected_shapes() const {
  std::map<std::string, std::vector<int>> out;
  for (const auto& [name, v] : params_) out.emplace(name, v.shape());
  return out;
}

void ParamSet::assign(const NamedArrays& arrays) {
  for (const auto& [name, t] : arrays) {
    auto it = params_.find(name);
    if (it == params_.end()) throw LoadError("unknown parameter in archive: " + name);
    if (it->second.shape() != t.shape()) {
      throw LoadError("shape mismatch for " + name + ": archive " + shape_string(t.shape()) +
                      ", model " + shape_string(it->second.shape()));
    }
  }
  for (const auto& [name, _] : params_) {
    if (!arrays.count(name)) throw LoadError("archive is missing parameter " + name);
  }
  for (auto& [name, v] : params_) v.mutable_value() = arrays.at(name);
}

void ParamSet::round_to_float() {
  for (auto& [_, v] : params_)
    for (double& x : v.mutable_value().values()) x = static_cast<double>(static_cast<float>(x));
}

std::uint64_t ParamSet::fingerprint(const std::string& prefix) const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* bytes, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [name, v] : params_) {
    if (!has_prefix(name, prefix)) continue;
    mix(name.data(), name.size());
    mix(v.value().data(), v.value().size() * sizeof(double));
  }
  return h;
}

Tensor random_normal(std::vector<int> shape, double stddev, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace egovos

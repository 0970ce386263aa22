#include "egovos/memory.hpp"

#include "egovos/errors.hpp"

namespace egovos {

MemoryBank::MemoryBank(int max_tail) : max_tail_(max_tail) {
  if (max_tail < 0) throw ConfigError("memory tail capacity must be >= 0");
}

void MemoryBank::check_compatible(const MemoryEntry& entry) const {
  const auto& k = entry.key.shape();
  const auto& v = entry.values.shape();
  if (k.size() != 3 || v.size() != 4 || v[2] != k[1] || v[3] != k[2]) {
    throw ShapeError("memory entry key " + shape_string(k) + " and values " + shape_string(v) +
                     " are inconsistent");
  }
  if (!permanent_) return;
  const auto& pk = permanent_->key.shape();
  const auto& pv = permanent_->values.shape();
  if (k != pk || v != pv) {
    throw ShapeError("memory entry " + shape_string(k) + "/" + shape_string(v) +
                     " does not match bank " + shape_string(pk) + "/" + shape_string(pv));
  }
}

void MemoryBank::set_permanent(MemoryEntry entry) {
  permanent_.reset();
  tail_.clear();
  check_compatible(entry);
  permanent_ = std::move(entry);
}

void MemoryBank::write(MemoryEntry entry) {
  if (!permanent_) throw ConfigError("memory bank must be initialized before writing");
  check_compatible(entry);
  tail_.push_back(std::move(entry));
  while (static_cast<int>(tail_.size()) > max_tail_) tail_.pop_front();
}

const MemoryEntry& MemoryBank::permanent() const {
  if (!permanent_) throw ConfigError("memory bank is not initialized");
  return *permanent_;
}

std::vector<int> MemoryBank::frame_indices() const {
  std::vector<int> out;
  if (permanent_) out.push_back(permanent_->frame_index);
  for (const auto& e : tail_) out.push_back(e.frame_index);
  return out;
}

int MemoryBank::num_objects() const { return permanent().values.dim(0); }

namespace {

std::vector<const MemoryEntry*> entries_of(const MemoryBank& bank) {
  std::vector<const MemoryEntry*> out{&bank.permanent()};
  for (const auto& e : bank.tail()) out.push_back(&e);
  return out;
}

}  // namespace

Tensor stacked_memory_keys(const MemoryBank& bank) {
  NoGradGuard no_grad;
  std::vector<Var> keys;
  for (const MemoryEntry* e : entries_of(bank)) {
    const auto& s = e->key.shape();
    keys.push_back(ops::reshape(e->key, {s[0], s[1] * s[2]}));
  }
  return ops::concat_columns(keys).value();
}

Var memory_read(const Var& query_key, const MemoryBank& bank, const ops::AttentionOptions& opts) {
  if (!bank.initialized()) {
    throw ConfigError("memory read from an empty bank (initialize with the first frame)");
  }
  const auto& qs = query_key.shape();
  if (qs.size() != 3) throw ShapeError("query key must be [Ck,h,w]");
  const auto& vs = bank.permanent().values.shape();
  const int n = vs[0], cv = vs[1];
  if (n == 0) return Var(Tensor({0, cv, qs[1], qs[2]}));

  std::vector<Var> keys, values;
  for (const MemoryEntry* e : entries_of(bank)) {
    const auto& ks = e->key.shape();
    keys.push_back(ops::reshape(e->key, {ks[0], ks[1] * ks[2]}));
    values.push_back(ops::reshape(e->values, {n * cv, ks[1] * ks[2]}));
  }
  Var q = ops::reshape(query_key, {qs[0], qs[1] * qs[2]});
  Var out = ops::attention_read(q, ops::concat_columns(keys), ops::concat_columns(values), opts);
  return ops::reshape(out, {n, cv, qs[1], qs[2]});
}

}  // namespace egovos

#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "egovos/autograd.hpp"
#include "egovos/ops.hpp"

namespace egovos {

/// One stored frame: key [Ck, h, w] and per-object values [N, Cv, h, w].
struct MemoryEntry {
  Var key;
  Var values;
  int frame_index = 0;
};

/// Permanent first-frame entry plus a FIFO tail of at most `max_tail`
/// entries. The permanent entry is never evicted.
class MemoryBank {
 public:
  explicit MemoryBank(int max_tail = 7);

  void set_permanent(MemoryEntry entry);
  /// Appends to the tail, evicting the oldest tail entry past capacity.
  void write(MemoryEntry entry);

  bool initialized() const noexcept { return permanent_.has_value(); }
  int max_tail() const noexcept { return max_tail_; }
  /// Permanent entry (when present) plus tail entries.
  std::size_t size() const noexcept { return (permanent_ ? 1 : 0) + tail_.size(); }
  const MemoryEntry& permanent() const;
  const std::deque<MemoryEntry>& tail() const noexcept { return tail_; }
  std::vector<int> frame_indices() const;
  int num_objects() const;

 private:
  void check_compatible(const MemoryEntry& entry) const;

  int max_tail_;
  std::optional<MemoryEntry> permanent_;
  std::deque<MemoryEntry> tail_;
};

/// Softmax-affinity readout over every stored location: [N, Cv, h, w] for a
/// query key [Ck, h, w].
Var memory_read(const Var& query_key, const MemoryBank& bank, const ops::AttentionOptions& opts);

/// All stored keys flattened to [Ck, M] (permanent first, then tail order).
Tensor stacked_memory_keys(const MemoryBank& bank);

}  // namespace egovos

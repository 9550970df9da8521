#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bayesproj/errors.hpp"

namespace bayesproj {

using NodeIndex = std::uint32_t;
using StepIndex = std::int64_t;

// Unordered source pair {i, j}, stored with lo < hi. Diagonal pairs are not
// representable.
class PairKey {
 public:
  PairKey(NodeIndex i, NodeIndex j) : lo_(std::min(i, j)), hi_(std::max(i, j)) {
    if (i == j) throw std::domain_error("diagonal pair {" + std::to_string(i) + "," + std::to_string(i) + "}");
  }

  NodeIndex lo() const noexcept { return lo_; }
  NodeIndex hi() const noexcept { return hi_; }
  std::uint64_t packed() const noexcept { return (std::uint64_t(lo_) << 32) | hi_; }

  friend bool operator==(const PairKey&, const PairKey&) = default;
  friend auto operator<=>(const PairKey& a, const PairKey& b) { return a.packed() <=> b.packed(); }

 private:
  NodeIndex lo_;
  NodeIndex hi_;
};

// Sparse pair-keyed collection: entries sorted by key, unique keys.
template <typename T>
class PairTable {
 public:
  struct Entry {
    PairKey key;
    T value;
  };

  PairTable() = default;

  // Takes entries already sorted by strictly increasing key.
  static PairTable from_sorted(std::vector<Entry> entries) {
    for (std::size_t n = 1; n < entries.size(); ++n) {
      if (!(entries[n - 1].key < entries[n].key)) {
        throw std::invalid_argument("PairTable entries must be strictly increasing by key");
      }
    }
    PairTable t;
    t.entries_ = std::move(entries);
    return t;
  }

  static PairTable from_sorted_unchecked(std::vector<Entry> entries) {
    PairTable t;
    t.entries_ = std::move(entries);
    return t;
  }

  const T* find(PairKey key) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const Entry& e, PairKey k) { return e.key < k; });
    if (it == entries_.end() || it->key != key) return nullptr;
    return &it->value;
  }

  bool contains(PairKey key) const { return find(key) != nullptr; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<Entry>& mutable_entries() noexcept { return entries_; }

  friend bool operator==(const PairTable& a, const PairTable& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t n = 0; n < a.entries_.size(); ++n) {
      if (a.entries_[n].key != b.entries_[n].key || !(a.entries_[n].value == b.entries_[n].value))
        return false;
    }
    return true;
  }

 private:
  std::vector<Entry> entries_;
};

// Bidirectional mapping between external identifiers and dense indices,
// assigned in registration order.
class NodeRegistry {
 public:
  NodeIndex intern(std::string_view id) {
    auto it = index_.find(std::string(id));
    if (it != index_.end()) return it->second;
    const auto idx = static_cast<NodeIndex>(ids_.size());
    ids_.emplace_back(id);
    index_.emplace(ids_.back(), idx);
    return idx;
  }

  NodeIndex at(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw LookupError("unknown node identifier '" + std::string(id) + "'");
    return it->second;
  }

  bool contains(std::string_view id) const { return index_.count(std::string(id)) != 0; }

  const std::string& id(NodeIndex idx) const {
    if (idx >= ids_.size()) throw LookupError("node index " + std::to_string(idx) + " not registered");
    return ids_[idx];
  }

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  friend bool operator==(const NodeRegistry& a, const NodeRegistry& b) { return a.ids_ == b.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, NodeIndex> index_;
};

struct Link {
  NodeIndex source;
  NodeIndex target;

  friend bool operator==(const Link&, const Link&) = default;
  friend auto operator<=>(const Link&, const Link&) = default;
};

// One time step's boolean N x K incidence structure, stored row-compressed
// (sources -> sorted targets).
class BipartiteSnapshot {
 public:
  BipartiteSnapshot() : row_offsets_(1, 0) {}

  // Duplicate links collapse; indices must be within [0,N) x [0,K).
  static BipartiteSnapshot from_links(StepIndex t, std::size_t source_count,
                                      std::size_t target_count, std::vector<Link> links) {
    if (t < 0) throw std::domain_error("step index must be nonnegative");
    for (const Link& l : links) {
      if (l.source >= source_count || l.target >= target_count) {
        throw std::domain_error("link (" + std::to_string(l.source) + "," + std::to_string(l.target) +
                                ") outside " + std::to_string(source_count) + "x" +
                                std::to_string(target_count) + " snapshot");
      }
    }
    std::sort(links.begin(), links.end());
    links.erase(std::unique(links.begin(), links.end()), links.end());

    BipartiteSnapshot s;
    s.t_ = t;
    s.source_count_ = source_count;
    s.target_count_ = target_count;
    s.row_offsets_.assign(source_count + 1, 0);
    s.targets_.reserve(links.size());
    for (const Link& l : links) {
      ++s.row_offsets_[l.source + 1];
      s.targets_.push_back(l.target);
    }
    for (std::size_t i = 0; i < source_count; ++i) s.row_offsets_[i + 1] += s.row_offsets_[i];
    return s;
  }

  static BipartiteSnapshot empty(StepIndex t, std::size_t source_count, std::size_t target_count) {
    return from_links(t, source_count, target_count, {});
  }

  StepIndex t() const noexcept { return t_; }
  std::size_t source_count() const noexcept { return source_count_; }
  std::size_t target_count() const noexcept { return target_count_; }
  std::size_t link_count() const noexcept { return targets_.size(); }

  // Sorted targets of source i; empty for indices beyond source_count.
  std::span<const NodeIndex> targets_of(NodeIndex i) const {
    if (i >= source_count_) return {};
    return {targets_.data() + row_offsets_[i], targets_.data() + row_offsets_[i + 1]};
  }

  std::size_t degree(NodeIndex i) const {
    return i < source_count_ ? row_offsets_[i + 1] - row_offsets_[i] : 0;
  }

  bool has_link(NodeIndex i, NodeIndex k) const {
    auto row = targets_of(i);
    return std::binary_search(row.begin(), row.end(), k);
  }

  std::vector<Link> links() const {
    std::vector<Link> out;
    out.reserve(targets_.size());
    for (NodeIndex i = 0; i < source_count_; ++i) {
      for (NodeIndex k : targets_of(i)) out.push_back({i, k});
    }
    return out;
  }

  friend bool operator==(const BipartiteSnapshot&, const BipartiteSnapshot&) = default;

 private:
  StepIndex t_ = 0;
  std::size_t source_count_ = 0;
  std::size_t target_count_ = 0;
  std::vector<std::size_t> row_offsets_;
  std::vector<NodeIndex> targets_;
};

}  // namespace bayesproj

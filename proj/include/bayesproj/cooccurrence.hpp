#pragma once

// Co-occurrence (strict upper triangle of B B^T) and opportunity (row-wise OR
// count) computation over sparse snapshots. Rows are processed Gustavson
// style: for each source i, walk its targets, then the sources of each target,
// accumulating into a dense per-worker scratch row.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bayesproj/beta_binomial.hpp"
#include "bayesproj/parallel.hpp"
#include "bayesproj/snapshot.hpp"

namespace bayesproj {

namespace detail {

// Target -> sorted sources.
struct TargetIndex {
  std::vector<std::size_t> offsets;
  std::vector<NodeIndex> sources;

  explicit TargetIndex(const BipartiteSnapshot& s) : offsets(s.target_count() + 1, 0) {
    for (NodeIndex i = 0; i < s.source_count(); ++i) {
      for (NodeIndex k : s.targets_of(i)) ++offsets[k + 1];
    }
    for (std::size_t k = 0; k < s.target_count(); ++k) offsets[k + 1] += offsets[k];
    sources.resize(s.link_count());
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    // Rows visited in increasing i, so each target's source list comes out sorted.
    for (NodeIndex i = 0; i < s.source_count(); ++i) {
      for (NodeIndex k : s.targets_of(i)) sources[cursor[k]++] = i;
    }
  }

  std::span<const NodeIndex> sources_of(NodeIndex k) const {
    return {sources.data() + offsets[k], sources.data() + offsets[k + 1]};
  }
};

// Accumulates w_ij for j > i into scratch, recording touched columns.
inline void accumulate_row(const BipartiteSnapshot& s, const TargetIndex& ti, NodeIndex i,
                           std::vector<Count>& scratch, std::vector<NodeIndex>& touched) {
  touched.clear();
  for (NodeIndex k : s.targets_of(i)) {
    auto col = ti.sources_of(k);
    for (auto it = std::upper_bound(col.begin(), col.end(), i); it != col.end(); ++it) {
      if (scratch[*it]++ == 0) touched.push_back(*it);
    }
  }
}

template <typename T>
PairTable<T> concat_blocks(std::vector<std::vector<typename PairTable<T>::Entry>>& blocks) {
  std::size_t total = 0;
  for (const auto& b : blocks) total += b.size();
  std::vector<typename PairTable<T>::Entry> all;
  all.reserve(total);
  for (auto& b : blocks) {
    all.insert(all.end(), b.begin(), b.end());
    b.clear();
    b.shrink_to_fit();
  }
  return PairTable<T>::from_sorted_unchecked(std::move(all));
}

}  // namespace detail

// w_ij = |targets(i) ∩ targets(j)| for all i < j with w_ij >= 1.
inline PairTable<Count> co_occurrences(const BipartiteSnapshot& s, unsigned threads = 1) {
  using Entry = PairTable<Count>::Entry;
  const std::size_t n = s.source_count();
  const detail::TargetIndex ti(s);
  std::vector<std::vector<Entry>> blocks(block_count(n, threads));
  parallel_blocks(n, threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
    std::vector<Count> scratch(n, 0);
    std::vector<NodeIndex> touched;
    auto& out = blocks[b];
    for (std::size_t row = begin; row < end; ++row) {
      const auto i = static_cast<NodeIndex>(row);
      detail::accumulate_row(s, ti, i, scratch, touched);
      std::sort(touched.begin(), touched.end());
      for (NodeIndex j : touched) {
        out.push_back({PairKey(i, j), scratch[j]});
        scratch[j] = 0;
      }
    }
  });
  return detail::concat_blocks<Count>(blocks);
}

// x_ij = |targets(i) ∪ targets(j)| for each requested pair.
inline PairTable<Count> opportunities(const BipartiteSnapshot& s, std::span<const PairKey> pairs) {
  std::vector<PairKey> keys(pairs.begin(), pairs.end());
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<PairTable<Count>::Entry> out;
  out.reserve(keys.size());
  for (PairKey key : keys) {
    if (key.hi() >= s.source_count()) {
      throw std::domain_error("pair {" + std::to_string(key.lo()) + "," + std::to_string(key.hi()) +
                              "} outside snapshot with " + std::to_string(s.source_count()) +
                              " sources");
    }
    auto a = s.targets_of(key.lo());
    auto b = s.targets_of(key.hi());
    Count shared = 0;
    for (auto x = a.begin(), y = b.begin(); x != a.end() && y != b.end();) {
      if (*x < *y) {
        ++x;
      } else if (*y < *x) {
        ++y;
      } else {
        ++shared, ++x, ++y;
      }
    }
    out.push_back({key, static_cast<Count>(a.size() + b.size() - shared)});
  }
  return PairTable<Count>::from_sorted_unchecked(std::move(out));
}

// (w_ij, x_ij) for every pair over node_count sources with x_ij > 0, i.e. all
// pairs with at least one endpoint linked in s. Sources beyond
// s.source_count() are present with degree zero.
inline PairTable<PairObservation> pair_observations(const BipartiteSnapshot& s,
                                                    std::size_t node_count, unsigned threads = 1) {
  using Entry = PairTable<PairObservation>::Entry;
  const std::size_t n = std::max(node_count, s.source_count());
  const detail::TargetIndex ti(s);

  std::vector<NodeIndex> active;
  for (NodeIndex i = 0; i < s.source_count(); ++i) {
    if (s.degree(i) > 0) active.push_back(i);
  }
  std::vector<Count> degree(n, 0);
  for (NodeIndex i : active) degree[i] = static_cast<Count>(s.degree(i));

  std::vector<std::vector<Entry>> blocks(block_count(n, threads));
  parallel_blocks(n, threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
    std::vector<Count> scratch(n, 0);
    std::vector<NodeIndex> touched;
    auto& out = blocks[b];
    for (std::size_t row = begin; row < end; ++row) {
      const auto i = static_cast<NodeIndex>(row);
      const Count di = degree[i];
      if (di > 0) {
        detail::accumulate_row(s, ti, i, scratch, touched);
        for (std::size_t j = row + 1; j < n; ++j) {
          const Count w = scratch[j];
          out.push_back({PairKey(i, static_cast<NodeIndex>(j)), PairObservation(w, di + degree[j] - w)});
        }
        for (NodeIndex j : touched) scratch[j] = 0;
      } else {
        for (auto it = std::upper_bound(active.begin(), active.end(), i); it != active.end(); ++it) {
          out.push_back({PairKey(i, *it), PairObservation(0, degree[*it])});
        }
      }
    }
  });
  return detail::concat_blocks<PairObservation>(blocks);
}

}  // namespace bayesproj

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "grid.hpp"

namespace gridflood {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(int x, int y) {
    int px = find(x), py = find(y);
    if (px == py) return;
    if (rank_[px] < rank_[py]) std::swap(px, py);
    parent_[py] = px;
    if (rank_[px] == rank_[py]) ++rank_[px];
  }

 private:
  std::vector<int> parent_;
  std::vector<int> rank_;
};

// Connected components of the gamma-proximity graph: agents are adjacent when
// their L1 distance is at most gamma.
struct IslandPartition {
  double gamma = 0;
  std::vector<int> label;                     // agent -> component id (0-based, dense)
  std::vector<std::vector<int>> components;   // component id -> sorted member list

  int size_of(int agent) const { return static_cast<int>(components[label[agent]].size()); }
};

// Sorted cell list over flattened positions; cells are cubes of the given
// side, so any pair within L1 <= side lies in L-inf adjacent cells.
class CellList {
 public:
  CellList(std::span<const Coord> flat, int count, int d, const GridSpec& spec, long long side)
      : d_(d), side_(std::max<long long>(1, side)) {
    cells_per_axis_ = (2LL * spec.n) / side_ + 1;
    entries_.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
      entries_.push_back({key_of(flat.subspan(static_cast<std::size_t>(i) * d_, d_), spec), i});
    std::sort(entries_.begin(), entries_.end());
  }

  std::int64_t key_of(std::span<const Coord> pos, const GridSpec& spec) const {
    std::int64_t key = 0;
    for (int a = 0; a < d_; ++a)
      key = key * cells_per_axis_ + (static_cast<std::int64_t>(pos[a]) + spec.n) / side_;
    return key;
  }

  // Invokes fn(agent) for every agent whose cell is within one cell of pos's
  // cell along every axis.
  template <class Fn>
  void for_neighborhood(std::span<const Coord> pos, const GridSpec& spec, Fn&& fn) const {
    std::vector<std::int64_t> base(static_cast<std::size_t>(d_));
    for (int a = 0; a < d_; ++a) base[a] = (static_cast<std::int64_t>(pos[a]) + spec.n) / side_;
    std::vector<int> off(static_cast<std::size_t>(d_), -1);
    while (true) {
      std::int64_t key = 0;
      bool ok = true;
      for (int a = 0; a < d_ && ok; ++a) {
        const std::int64_t c = base[a] + off[a];
        if (c < 0 || c >= cells_per_axis_) ok = false;
        key = key * cells_per_axis_ + c;
      }
      if (ok) {
        auto lo = std::lower_bound(entries_.begin(), entries_.end(),
                                   std::pair<std::int64_t, int>{key, -1});
        for (auto it = lo; it != entries_.end() && it->first == key; ++it) fn(it->second);
      }
      int axis = d_ - 1;
      while (axis >= 0) {
        if (off[axis] < 1) {
          ++off[axis];
          break;
        }
        off[axis] = -1;
        --axis;
      }
      if (axis < 0) break;
    }
  }

 private:
  int d_;
  long long side_;
  long long cells_per_axis_;
  std::vector<std::pair<std::int64_t, int>> entries_;
};

namespace detail {

inline IslandPartition finalize_partition(UnionFind& uf, int m, double gamma) {
  IslandPartition part;
  part.gamma = gamma;
  part.label.assign(static_cast<std::size_t>(m), -1);
  std::vector<int> root_to_comp(static_cast<std::size_t>(m), -1);
  for (int i = 0; i < m; ++i) {
    const int r = uf.find(i);
    if (root_to_comp[r] < 0) {
      root_to_comp[r] = static_cast<int>(part.components.size());
      part.components.emplace_back();
    }
    part.label[i] = root_to_comp[r];
    part.components[static_cast<std::size_t>(root_to_comp[r])].push_back(i);
  }
  return part;
}

}  // namespace detail

// Cell-list implementation; the naive all-pairs variant below is the oracle.
inline IslandPartition islands(std::span<const Coord> flat, int m, const GridSpec& spec,
                               double gamma) {
  const int d = spec.d;
  const auto reach = static_cast<long long>(std::floor(std::max(0.0, gamma)));
  UnionFind uf(m);
  CellList cells(flat, m, d, spec, std::max<long long>(1, reach));
  for (int i = 0; i < m; ++i) {
    const auto pi = flat.subspan(static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d));
    cells.for_neighborhood(pi, spec, [&](int j) {
      if (j >= i) return;
      const auto pj = flat.subspan(static_cast<std::size_t>(j) * d, static_cast<std::size_t>(d));
      if (l1_distance(pi, pj) <= reach) uf.unite(i, j);
    });
  }
  return detail::finalize_partition(uf, m, gamma);
}

inline IslandPartition islands_naive(std::span<const Coord> flat, int m, const GridSpec& spec,
                                     double gamma) {
  const int d = spec.d;
  const auto reach = static_cast<long long>(std::floor(std::max(0.0, gamma)));
  UnionFind uf(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < i; ++j) {
      const auto pi = flat.subspan(static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d));
      const auto pj = flat.subspan(static_cast<std::size_t>(j) * d, static_cast<std::size_t>(d));
      if (l1_distance(pi, pj) <= reach) uf.unite(i, j);
    }
  return detail::finalize_partition(uf, m, gamma);
}

}  // namespace gridflood

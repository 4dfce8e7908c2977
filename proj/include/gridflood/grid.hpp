#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <vector>

#include "rng.hpp"

namespace gridflood {

using Coord = std::int32_t;
using Position = std::vector<Coord>;

// Bounded lattice {-n, ..., n}^d. Missing edges at the boundary act as
// self-loops, so every vertex has degree exactly 2d.
struct GridSpec {
  int d = 1;
  int n = 0;

  int side() const { return 2 * n + 1; }

  long long volume() const {
    long long v = 1;
    for (int i = 0; i < d; ++i) v *= side();
    return v;
  }

  bool in_bounds(std::span<const Coord> pos) const {
    if (static_cast<int>(pos.size()) != d) return false;
    for (Coord c : pos)
      if (c < -n || c > n) return false;
    return true;
  }

  void validate() const {
    if (d < 1) throw std::invalid_argument("GridSpec: d must be >= 1");
    if (n < 0) throw std::invalid_argument("GridSpec: n must be >= 0");
  }
};

inline long long l1_distance(std::span<const Coord> a, std::span<const Coord> b) {
  long long s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::llabs(static_cast<long long>(a[i]) - b[i]);
  return s;
}

inline long long linf_distance(std::span<const Coord> a, std::span<const Coord> b) {
  long long s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    long long v = std::llabs(static_cast<long long>(a[i]) - b[i]);
    if (v > s) s = v;
  }
  return s;
}

inline double l2_distance(std::span<const Coord> a, std::span<const Coord> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double v = static_cast<double>(a[i]) - b[i];
    s += v * v;
  }
  return std::sqrt(s);
}

inline long long l1_norm(std::span<const Coord> a) {
  long long s = 0;
  for (Coord c : a) s += std::llabs(static_cast<long long>(c));
  return s;
}

inline long long linf_norm(std::span<const Coord> a) {
  long long s = 0;
  for (Coord c : a) s = std::max(s, std::llabs(static_cast<long long>(c)));
  return s;
}

inline double l2_norm(std::span<const Coord> a) {
  double s = 0;
  for (Coord c : a) s += static_cast<double>(c) * c;
  return std::sqrt(s);
}

// Applies move k in {0, ..., 2d-1}: axis k/2, direction (k%2 ? +1 : -1).
// A move that would leave the grid is a self-loop.
inline void step_directed(const GridSpec& spec, std::span<Coord> pos, int k) {
  const int axis = k >> 1;
  const Coord delta = (k & 1) ? 1 : -1;
  const Coord c = pos[axis] + delta;
  if (c >= -spec.n && c <= spec.n) pos[axis] = c;
}

// One symmetric random-walk step: each of the 2d moves has mass 1/(2d).
inline void step_in_place(const GridSpec& spec, std::span<Coord> pos, RngStream& rng) {
  step_directed(spec, pos, static_cast<int>(rng.next_below(static_cast<std::uint32_t>(2 * spec.d))));
}

inline Position step(const GridSpec& spec, const Position& pos, RngStream& rng) {
  Position out = pos;
  step_in_place(spec, std::span<Coord>(out), rng);
  return out;
}

// True iff every coordinate is at least r (in L-inf) away from the boundary.
inline bool in_interior(const GridSpec& spec, std::span<const Coord> pos, double r) {
  for (Coord c : pos)
    if (c < -spec.n + r || c > spec.n - r) return false;
  return true;
}

// Number of lattice points of the clipped L-inf ball B(center, x).
inline long long ball_size(const GridSpec& spec, std::span<const Coord> center, double x) {
  if (x < 0) return 0;
  const auto r = static_cast<long long>(std::floor(x));
  long long total = 1;
  for (int i = 0; i < spec.d; ++i) {
    const long long lo = std::max<long long>(-spec.n, center[i] - r);
    const long long hi = std::min<long long>(spec.n, center[i] + r);
    if (hi < lo) return 0;
    total *= hi - lo + 1;
  }
  return total;
}

// Materializes the clipped L-inf ball, in lexicographic order.
inline std::vector<Position> ball(const GridSpec& spec, std::span<const Coord> center, double x) {
  std::vector<Position> out;
  if (x < 0) return out;
  const auto r = static_cast<Coord>(std::floor(x));
  std::vector<Coord> lo(spec.d), hi(spec.d);
  for (int i = 0; i < spec.d; ++i) {
    lo[i] = std::max<Coord>(-spec.n, center[i] - r);
    hi[i] = std::min<Coord>(spec.n, center[i] + r);
    if (hi[i] < lo[i]) return out;
  }
  Position cur(lo.begin(), lo.end());
  out.reserve(static_cast<std::size_t>(ball_size(spec, center, x)));
  while (true) {
    out.push_back(cur);
    int axis = spec.d - 1;
    while (axis >= 0) {
      if (cur[axis] < hi[axis]) {
        ++cur[axis];
        break;
      }
      cur[axis] = lo[axis];
      --axis;
    }
    if (axis < 0) break;
  }
  return out;
}

}  // namespace gridflood

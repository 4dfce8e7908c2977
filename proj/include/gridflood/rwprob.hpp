#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "grid.hpp"
#include "mc.hpp"
#include "rng.hpp"

namespace gridflood {

// ---------------------------------------------------------------------------
// Exact distribution evolution on the bounded grid
// ---------------------------------------------------------------------------

inline constexpr long long kExactStateCap = 1'000'000;

struct DistVector {
  GridSpec spec;
  std::vector<double> mass;  // flattened, row-major over (c + n) per axis

  std::size_t index_of(std::span<const Coord> pos) const {
    std::size_t idx = 0;
    for (int a = 0; a < spec.d; ++a)
      idx = idx * static_cast<std::size_t>(spec.side()) +
            static_cast<std::size_t>(pos[a] + spec.n);
    return idx;
  }
};

inline DistVector uniform_dist(const GridSpec& spec) {
  spec.validate();
  if (spec.volume() > kExactStateCap)
    throw std::invalid_argument("uniform_dist: state count exceeds the exact-mode cap");
  DistVector v{spec, std::vector<double>(static_cast<std::size_t>(spec.volume()),
                                         1.0 / static_cast<double>(spec.volume()))};
  return v;
}

inline DistVector point_mass(const GridSpec& spec, std::span<const Coord> pos) {
  spec.validate();
  if (spec.volume() > kExactStateCap)
    throw std::invalid_argument("point_mass: state count exceeds the exact-mode cap");
  if (!spec.in_bounds(pos)) throw std::invalid_argument("point_mass: position out of bounds");
  DistVector v{spec, std::vector<double>(static_cast<std::size_t>(spec.volume()), 0.0)};
  v.mass[v.index_of(pos)] = 1.0;
  return v;
}

// Applies the bounded-walk kernel t times. The kernel is doubly stochastic
// (boundary self-loops), so the uniform vector is a fixed point. The lazy
// variant mixes one half staying mass per step.
inline DistVector evolve_exact(const DistVector& start, std::int64_t t, bool lazy = false) {
  const GridSpec& spec = start.spec;
  if (spec.volume() > kExactStateCap)
    throw std::invalid_argument("evolve_exact: state count exceeds the exact-mode cap");
  const auto volume = static_cast<std::size_t>(spec.volume());
  const int side = spec.side();
  const int d = spec.d;
  const double move_mass = (lazy ? 0.5 : 1.0) / static_cast<double>(2 * d);

  std::vector<std::size_t> stride(static_cast<std::size_t>(d));
  stride[static_cast<std::size_t>(d - 1)] = 1;
  for (int a = d - 2; a >= 0; --a)
    stride[static_cast<std::size_t>(a)] = stride[static_cast<std::size_t>(a + 1)] * static_cast<std::size_t>(side);

  DistVector cur = start;
  std::vector<double> next(volume);
  std::vector<int> coords(static_cast<std::size_t>(d), 0);  // 0-based per axis
  for (std::int64_t s = 0; s < t; ++s) {
    std::fill(next.begin(), next.end(), 0.0);
    std::fill(coords.begin(), coords.end(), 0);
    for (std::size_t idx = 0; idx < volume; ++idx) {
      const double w = cur.mass[idx];
      if (w != 0.0) {
        if (lazy) next[idx] += 0.5 * w;
        for (int a = 0; a < d; ++a) {
          const int c = coords[static_cast<std::size_t>(a)];
          next[c > 0 ? idx - stride[static_cast<std::size_t>(a)] : idx] += move_mass * w;
          next[c + 1 < side ? idx + stride[static_cast<std::size_t>(a)] : idx] += move_mass * w;
        }
      }
      for (int a = d - 1; a >= 0; --a) {
        if (++coords[static_cast<std::size_t>(a)] < side) break;
        coords[static_cast<std::size_t>(a)] = 0;
      }
    }
    cur.mass.swap(next);
  }
  return cur;
}

// Half the pointwise absolute-difference sum; the subset maximum in the
// definition is attained by the positive-part set.
inline double statistical_distance(const DistVector& p, const DistVector& q) {
  if (p.spec.d != q.spec.d || p.spec.n != q.spec.n)
    throw std::invalid_argument("statistical_distance: support mismatch");
  double s = 0;
  for (std::size_t i = 0; i < p.mass.size(); ++i) s += std::abs(p.mass[i] - q.mass[i]);
  return 0.5 * s;
}

struct MixingProfile {
  std::int64_t t = 0;   // smallest t with distance <= eps
  double distance = 0;  // distance at that t
  bool lazy = false;    // which kernel was used
};

// Total-variation distance to the stationary distribution is non-increasing
// in t, so doubling followed by bisection finds the exact threshold.
inline MixingProfile mixing_profile(const GridSpec& spec, std::span<const Coord> start, double eps,
                                    bool lazy = false) {
  const DistVector uniform = uniform_dist(spec);
  auto distance_at = [&](std::int64_t t) {
    return statistical_distance(evolve_exact(point_mass(spec, start), t, lazy), uniform);
  };
  if (distance_at(0) <= eps) return {0, distance_at(0), lazy};
  std::int64_t hi = 1;
  while (distance_at(hi) > eps) {
    hi *= 2;
    if (hi > (1LL << 40)) throw std::runtime_error("mixing_profile: no convergence");
  }
  std::int64_t lo = hi / 2;  // distance(lo) > eps
  while (lo + 1 < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (distance_at(mid) <= eps ? hi : lo) = mid;
  }
  return {hi, distance_at(hi), lazy};
}

// ---------------------------------------------------------------------------
// One-dimensional first passage
// ---------------------------------------------------------------------------

// phi_{r,t} = (r/t) C(t, (t+r)/2) 2^{-t}; zero off-parity or for t < r.
inline double passage_pmf_1d(long long r, long long t) {
  if (r < 1) throw std::invalid_argument("passage_pmf_1d: r must be >= 1");
  if (t < 1) throw std::invalid_argument("passage_pmf_1d: t must be >= 1");
  if (t < r || (t - r) % 2 != 0) return 0.0;
  const double td = static_cast<double>(t);
  const double k = static_cast<double>(t + r) / 2.0;
  const double log_binom = std::lgamma(td + 1.0) - std::lgamma(k + 1.0) - std::lgamma(td - k + 1.0);
  return static_cast<double>(r) / td * std::exp(log_binom - td * std::numbers::ln2);
}

// ---------------------------------------------------------------------------
// Unbounded-walk occupation probabilities
// ---------------------------------------------------------------------------

namespace detail {

// P[1-d +-1 walk of length s sits at displacement x].
inline double axis_walk_pmf(long long s, long long x) {
  const long long ax = std::llabs(x);
  if (ax > s || (s - ax) % 2 != 0) return 0.0;
  if (s == 0) return 1.0;
  const double sd = static_cast<double>(s);
  const double k = static_cast<double>(s + ax) / 2.0;
  const double log_binom = std::lgamma(sd + 1.0) - std::lgamma(k + 1.0) - std::lgamma(sd - k + 1.0);
  return std::exp(log_binom - sd * std::numbers::ln2);
}

inline double binom_pmf(long long n, long long k, double p) {
  if (k < 0 || k > n) return 0.0;
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  const double log_binom = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
  return std::exp(log_binom + kd * std::log(p) + (nd - kd) * std::log1p(-p));
}

}  // namespace detail

inline constexpr long long kExactOccupationCap = 4096;

// Exact occupation probability of an unbounded d-dimensional walk: condition
// on the multinomial split of the t steps across axes, each axis then being
// an independent 1-d walk. O(d t^2).
inline double p_unbounded(int d, long long t, std::span<const Coord> x) {
  if (d < 1 || static_cast<int>(x.size()) != d)
    throw std::invalid_argument("p_unbounded: dimension mismatch");
  if (t < 0) throw std::invalid_argument("p_unbounded: t must be >= 0");
  if (t > kExactOccupationCap)
    throw std::invalid_argument("p_unbounded: t exceeds the exact-mode cap");
  if ((t - l1_norm(x)) % 2 != 0) return 0.0;
  if (l1_norm(x) > t) return 0.0;

  // r[k][u]: expected product of axis pmfs for axes k..d-1 given u steps
  // split uniformly among them.
  std::vector<double> r(static_cast<std::size_t>(t) + 1);
  for (long long u = 0; u <= t; ++u)
    r[static_cast<std::size_t>(u)] = detail::axis_walk_pmf(u, x[static_cast<std::size_t>(d - 1)]);
  for (int k = d - 2; k >= 0; --k) {
    const double p = 1.0 / static_cast<double>(d - k);
    std::vector<double> nr(static_cast<std::size_t>(t) + 1, 0.0);
    for (long long u = 0; u <= t; ++u) {
      double acc = 0;
      for (long long s = 0; s <= u; ++s) {
        const double axis = detail::axis_walk_pmf(s, x[static_cast<std::size_t>(k)]);
        if (axis != 0.0)
          acc += detail::binom_pmf(u, s, p) * axis * r[static_cast<std::size_t>(u - s)];
      }
      nr[static_cast<std::size_t>(u)] = acc;
    }
    r.swap(nr);
  }
  return r[static_cast<std::size_t>(t)];
}

// Local-CLT form 2 (d / 2 pi t)^{d/2} exp(-d |x|_2^2 / 2t), for comparison
// against the exact mode.
inline double p_gaussian(int d, long long t, std::span<const Coord> x) {
  if (t < 1) throw std::invalid_argument("p_gaussian: t must be >= 1");
  double norm2 = 0;
  for (Coord c : x) norm2 += static_cast<double>(c) * c;
  const double base = static_cast<double>(d) / (2.0 * std::numbers::pi * static_cast<double>(t));
  return 2.0 * std::pow(base, d / 2.0) *
         std::exp(-static_cast<double>(d) * norm2 / (2.0 * static_cast<double>(t)));
}

// Exact visit-within-t probability by absorbing DP over the reachable box.
// Small t only; this is the oracle the MC estimator is checked against.
inline double q_exact(int d, long long t, std::span<const Coord> x) {
  if (d < 1 || static_cast<int>(x.size()) != d)
    throw std::invalid_argument("q_exact: dimension mismatch");
  long long reach = t;
  long long volume = 1;
  for (int a = 0; a < d; ++a) {
    volume *= 2 * reach + 1;
    if (volume > kExactStateCap) throw std::invalid_argument("q_exact: state count exceeds cap");
  }
  const long long side = 2 * reach + 1;
  auto index_of = [&](std::span<const long long> c) {
    std::size_t idx = 0;
    for (int a = 0; a < d; ++a)
      idx = idx * static_cast<std::size_t>(side) + static_cast<std::size_t>(c[a] + reach);
    return idx;
  };
  std::vector<long long> target(x.begin(), x.end());

  std::vector<double> cur(static_cast<std::size_t>(volume), 0.0), next(cur);
  std::vector<long long> origin(static_cast<std::size_t>(d), 0);
  cur[index_of(origin)] = 1.0;
  double absorbed = 0.0;  // visits counted from s >= 1
  std::vector<long long> coords(static_cast<std::size_t>(d));
  std::vector<std::size_t> stride(static_cast<std::size_t>(d));
  stride[static_cast<std::size_t>(d - 1)] = 1;
  for (int a = d - 2; a >= 0; --a)
    stride[static_cast<std::size_t>(a)] = stride[static_cast<std::size_t>(a + 1)] * static_cast<std::size_t>(side);
  const std::size_t target_idx = index_of(target);

  for (long long s = 1; s <= t; ++s) {
    std::fill(next.begin(), next.end(), 0.0);
    std::fill(coords.begin(), coords.end(), -reach);
    const double w = 1.0 / static_cast<double>(2 * d);
    for (std::size_t idx = 0; idx < cur.size(); ++idx) {
      const double mass = cur[idx];
      if (mass != 0.0) {
        for (int a = 0; a < d; ++a) {
          if (coords[static_cast<std::size_t>(a)] > -reach)
            next[idx - stride[static_cast<std::size_t>(a)]] += w * mass;
          if (coords[static_cast<std::size_t>(a)] < reach)
            next[idx + stride[static_cast<std::size_t>(a)]] += w * mass;
        }
      }
      for (int a = d - 1; a >= 0; --a) {
        if (++coords[static_cast<std::size_t>(a)] <= reach) break;
        coords[static_cast<std::size_t>(a)] = -reach;
      }
    }
    absorbed += next[target_idx];
    next[target_idx] = 0.0;
    cur.swap(next);
  }
  return absorbed;
}

// ---------------------------------------------------------------------------
// Monte-Carlo estimators on unbounded walks
// ---------------------------------------------------------------------------

namespace detail {

inline void unbounded_step(std::span<long long> pos, int d, RngStream& rng) {
  const auto k = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(2 * d)));
  pos[static_cast<std::size_t>(k >> 1)] += (k & 1) ? 1 : -1;
}

inline long long l1_ll(std::span<const long long> a, std::span<const long long> b) {
  long long s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::llabs(a[i] - b[i]);
  return s;
}

}  // namespace detail

// MC fraction of walks from the origin visiting x within t (visits counted
// from step 1).
inline MCEstimate q_estimate(int d, long long t, std::span<const Coord> x, std::int64_t n_trials,
                             std::uint64_t seed, int workers = 1) {
  if (static_cast<int>(x.size()) != d) throw std::invalid_argument("q_estimate: dimension mismatch");
  std::vector<long long> target(x.begin(), x.end());
  return mc_binomial(n_trials, seed, 0x71ull, workers, [&](RngStream& rng) {
    std::vector<long long> pos(static_cast<std::size_t>(d), 0);
    for (long long s = 1; s <= t; ++s) {
      detail::unbounded_step(pos, d, rng);
      if (detail::l1_ll(pos, target) == 0) return true;
    }
    return false;
  });
}

// Two-walk collision probability within t for starts x apart. Collisions can
// only happen when |x|_1 is even, hence the parity precondition.
inline MCEstimate collision_estimate(std::span<const Coord> x, long long t, std::int64_t n_trials,
                                     std::uint64_t seed, int workers = 1) {
  if (l1_norm(x) % 2 != 0)
    throw std::invalid_argument(
        "collision_estimate: |x|_1 must be even (collision parity precondition)");
  const int d = static_cast<int>(x.size());
  return mc_binomial(n_trials, seed, 0x51ull, workers, [&](RngStream& rng) {
    std::vector<long long> a(static_cast<std::size_t>(d), 0);
    std::vector<long long> b(x.begin(), x.end());
    for (long long s = 1; s <= t; ++s) {
      detail::unbounded_step(a, d, rng);
      detail::unbounded_step(b, d, rng);
      if (detail::l1_ll(a, b) == 0) return true;
    }
    return false;
  });
}

struct CouplingCheck {
  MCEstimate collision;  // Q_hat(t, x)
  MCEstimate visit;      // q_hat(2t, x)
  double z = 0;
};

// Empirical test of the identity Q(t, x) = q(2t, x).
inline CouplingCheck coupling_check(long long t, std::span<const Coord> x, std::int64_t n_trials,
                                    std::uint64_t seed, int workers = 1) {
  CouplingCheck out;
  out.collision = collision_estimate(x, t, n_trials, seed, workers);
  out.visit = q_estimate(static_cast<int>(x.size()), 2 * t, x, n_trials, seed + 1, workers);
  out.z = z_score(out.collision, out.visit);
  return out;
}

// MC probability that two independent walks starting x apart come within L1
// distance 1 by time t; t = 0 counts when they already meet.
inline MCEstimate meet_estimate(long long t, std::span<const Coord> x, std::int64_t n_trials,
                                std::uint64_t seed, int workers = 1) {
  const int d = static_cast<int>(x.size());
  if (l1_norm(x) <= 1) return {1.0, n_trials};
  return mc_binomial(n_trials, seed, 0x4Dull, workers, [&](RngStream& rng) {
    std::vector<long long> a(static_cast<std::size_t>(d), 0);
    std::vector<long long> b(x.begin(), x.end());
    for (long long s = 1; s <= t; ++s) {
      detail::unbounded_step(a, d, rng);
      detail::unbounded_step(b, d, rng);
      if (detail::l1_ll(a, b) <= 1) return true;
    }
    return false;
  });
}

// Exact meet-within-t for two independent d=3 walks via the difference walk
// (36 simultaneous move pairs per step), absorbing at |D|_1 <= 1. Oracle for
// meet_estimate at small t.
inline double meet_exact_pairdiff(long long t, std::span<const Coord> x) {
  if (x.size() != 3) throw std::invalid_argument("meet_exact_pairdiff: d must be 3");
  const long long reach = linf_norm(x) + 2 * t;
  const long long side = 2 * reach + 1;
  if (side * side * side > 8 * kExactStateCap)
    throw std::invalid_argument("meet_exact_pairdiff: state count exceeds cap");
  auto index_of = [&](long long cx, long long cy, long long cz) {
    return static_cast<std::size_t>(((cx + reach) * side + (cy + reach)) * side + (cz + reach));
  };
  if (l1_norm(x) <= 1) return 1.0;

  // Difference kernel: 6/36 stay, 1/36 for each +-2e_k, 1/36 for each of the
  // 24 mixed two-axis displacements.
  struct Move {
    int dx, dy, dz;
    double w;
  };
  std::vector<Move> kernel;
  kernel.push_back({0, 0, 0, 6.0 / 36.0});
  const int axes[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int a = 0; a < 3; ++a)
    for (int sgn : {-2, 2})
      kernel.push_back({sgn * axes[a][0], sgn * axes[a][1], sgn * axes[a][2], 1.0 / 36.0});
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      if (a == b) continue;
      for (int sa : {-1, 1})
        for (int sb : {-1, 1})
          kernel.push_back({sa * axes[a][0] + sb * axes[b][0], sa * axes[a][1] + sb * axes[b][1],
                            sa * axes[a][2] + sb * axes[b][2], 1.0 / 36.0});
    }

  std::vector<double> cur(static_cast<std::size_t>(side * side * side), 0.0), next(cur);
  cur[index_of(x[0], x[1], x[2])] = 1.0;
  double absorbed = 0.0;
  for (long long s = 1; s <= t; ++s) {
    std::fill(next.begin(), next.end(), 0.0);
    for (long long cx = -reach; cx <= reach; ++cx)
      for (long long cy = -reach; cy <= reach; ++cy)
        for (long long cz = -reach; cz <= reach; ++cz) {
          const double mass = cur[index_of(cx, cy, cz)];
          if (mass == 0.0) continue;
          for (const Move& mv : kernel) {
            const long long nx = cx + mv.dx, ny = cy + mv.dy, nz = cz + mv.dz;
            if (std::llabs(nx) > reach || std::llabs(ny) > reach || std::llabs(nz) > reach)
              continue;
            next[index_of(nx, ny, nz)] += mv.w * mass;
          }
        }
    // absorb everything with |D|_1 <= 1
    for (long long cx = -1; cx <= 1; ++cx)
      for (long long cy = -1; cy <= 1; ++cy)
        for (long long cz = -1; cz <= 1; ++cz) {
          if (std::llabs(cx) + std::llabs(cy) + std::llabs(cz) > 1) continue;
          absorbed += next[index_of(cx, cy, cz)];
          next[index_of(cx, cy, cz)] = 0.0;
        }
    cur.swap(next);
  }
  return absorbed;
}

// Canonical source placement for the multi-walk catch probe: source i sits at
// distance x along axis i%3 (alternating sign), pushed one extra step along
// the next axis for every full shell of six, so every source keeps L1
// distance >= x from the target's start.
inline std::vector<Coord> multi_catch_source(int i, long long x) {
  std::vector<Coord> p(3, 0);
  const int axis = i % 3;
  const int sign = (i % 6) < 3 ? 1 : -1;
  p[static_cast<std::size_t>(axis)] = static_cast<Coord>(sign * x);
  p[static_cast<std::size_t>((axis + 1) % 3)] = static_cast<Coord>(i / 6);
  return p;
}

// MC probability that all j walks meet the target walk within t = x^2. Each
// walk runs on its own substream, target first, so the j+1 configuration
// replays the j configuration's paths exactly and the estimate is
// nonincreasing in j trial by trial.
inline MCEstimate multi_catch_estimate(int j, long long x, std::int64_t n_trials,
                                       std::uint64_t seed, int workers = 1) {
  if (j < 1) throw std::invalid_argument("multi_catch_estimate: j must be >= 1");
  if (x < 2) throw std::invalid_argument("multi_catch_estimate: x must be >= 2");
  const long long t = x * x;
  std::vector<std::vector<Coord>> sources;
  for (int i = 0; i < j; ++i) sources.push_back(multi_catch_source(i, x));
  return mc_binomial(n_trials, seed, 0x4A43ull, workers, [&](RngStream& rng) {
    RngStream target_rng(rng.next_u64());
    std::vector<RngStream> walk_rng;
    std::vector<std::vector<long long>> walks;
    walks.reserve(static_cast<std::size_t>(j));
    for (int i = 0; i < j; ++i) {
      walk_rng.emplace_back(rng.next_u64());
      walks.emplace_back(sources[static_cast<std::size_t>(i)].begin(),
                         sources[static_cast<std::size_t>(i)].end());
    }
    std::vector<long long> target(3, 0);
    std::vector<std::uint8_t> met(static_cast<std::size_t>(j), 0);
    int met_count = 0;
    for (long long s = 1; s <= t && met_count < j; ++s) {
      for (int i = 0; i < j; ++i)
        detail::unbounded_step(walks[static_cast<std::size_t>(i)], 3,
                               walk_rng[static_cast<std::size_t>(i)]);
      detail::unbounded_step(target, 3, target_rng);
      for (int i = 0; i < j; ++i) {
        if (met[static_cast<std::size_t>(i)]) continue;
        if (detail::l1_ll(walks[static_cast<std::size_t>(i)], target) <= 1) {
          met[static_cast<std::size_t>(i)] = 1;
          ++met_count;
        }
      }
    }
    return met_count == j;
  });
}

// MC probability that two bounded walks meet within |A-B|_1^2 steps with
// neither touching a boundary first. Precondition: A at L-inf distance
// >= 40 |A-B|_1 from every boundary. A boundary visit at the same step as a
// meeting counts as a boundary visit.
inline MCEstimate boundary_meet_estimate(const GridSpec& spec, std::span<const Coord> a_start,
                                         std::span<const Coord> b_start, std::int64_t n_trials,
                                         std::uint64_t seed, int workers = 1) {
  spec.validate();
  if (!spec.in_bounds(a_start) || !spec.in_bounds(b_start))
    throw std::invalid_argument("boundary_meet_estimate: start out of bounds");
  const long long x1 = l1_distance(a_start, b_start);
  long long boundary_gap = spec.n;
  for (Coord c : a_start)
    boundary_gap = std::min(boundary_gap, static_cast<long long>(spec.n) - std::llabs(c));
  if (boundary_gap < 40 * x1)
    throw std::invalid_argument(
        "boundary_meet_estimate: A must be at L-inf distance >= 40 |A-B|_1 from every boundary");
  if (x1 <= 1) return {1.0, n_trials};
  const long long t = x1 * x1;
  auto on_boundary = [&](std::span<const Coord> p) {
    for (Coord c : p)
      if (c == spec.n || c == -spec.n) return true;
    return false;
  };
  return mc_binomial(n_trials, seed, 0x42ull, workers, [&](RngStream& rng) {
    std::vector<Coord> a(a_start.begin(), a_start.end());
    std::vector<Coord> b(b_start.begin(), b_start.end());
    for (long long s = 1; s <= t; ++s) {
      step_in_place(spec, a, rng);
      step_in_place(spec, b, rng);
      if (on_boundary(a) || on_boundary(b)) return false;
      if (l1_distance(a, b) <= 1) return true;
    }
    return false;
  });
}

}  // namespace gridflood

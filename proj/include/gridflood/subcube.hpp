#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "grid.hpp"

namespace gridflood {

// Partition of the d=3 grid into ell2hat-cubes with good/bad labels: a cube
// is good when it holds strictly more than ell2hat/2 infected agents. The
// lattice has b = ceil((2n+1)/ell2hat) cubes per axis, the last slab
// truncated at the boundary.
struct SubcubeView {
  int ell2hat = 1;
  int b = 1;
  std::vector<std::int32_t> total_count;     // b^3 cubes, flat index
  std::vector<std::int32_t> infected_count;  // b^3 cubes
  std::vector<std::int32_t> agent_cube;      // per agent flat cube index
  std::vector<std::int64_t> good_cubes;      // sorted flat indices of the good set
  std::int64_t a_fG = 0, a_uG = 0, a_fB = 0, a_uB = 0;
  int p_type = 0;  // configuration type 1..4

  std::int64_t cube_count() const { return 1LL * b * b * b; }
};

inline SubcubeView subcube_view(std::span<const Coord> flat_pos, std::span<const std::uint8_t> infected,
                                int m, const GridSpec& spec, int ell2hat) {
  if (spec.d != 3) throw std::invalid_argument("subcube_view: d must be 3");
  if (ell2hat < 1) throw std::invalid_argument("subcube_view: ell2hat must be >= 1");
  if (ell2hat > spec.side())
    throw std::invalid_argument("subcube_view: ell2hat exceeds the grid side (sparse regime)");

  SubcubeView view;
  view.ell2hat = ell2hat;
  view.b = static_cast<int>((spec.side() + ell2hat - 1) / ell2hat);
  const auto cubes = static_cast<std::size_t>(view.cube_count());
  view.total_count.assign(cubes, 0);
  view.infected_count.assign(cubes, 0);
  view.agent_cube.resize(static_cast<std::size_t>(m));

  for (int i = 0; i < m; ++i) {
    std::int64_t idx = 0;
    for (int a = 0; a < 3; ++a) {
      const std::int64_t axis_cell =
          (static_cast<std::int64_t>(flat_pos[static_cast<std::size_t>(i) * 3 + a]) + spec.n) / ell2hat;
      idx = idx * view.b + axis_cell;
    }
    view.agent_cube[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(idx);
    ++view.total_count[static_cast<std::size_t>(idx)];
    if (infected[static_cast<std::size_t>(i)]) ++view.infected_count[static_cast<std::size_t>(idx)];
  }

  const double good_threshold = ell2hat / 2.0;
  std::vector<std::uint8_t> is_good(cubes, 0);
  for (std::size_t c = 0; c < cubes; ++c)
    if (view.infected_count[c] > good_threshold) {
      is_good[c] = 1;
      view.good_cubes.push_back(static_cast<std::int64_t>(c));
    }

  for (int i = 0; i < m; ++i) {
    const bool good = is_good[static_cast<std::size_t>(view.agent_cube[static_cast<std::size_t>(i)])] != 0;
    const bool inf = infected[static_cast<std::size_t>(i)] != 0;
    if (inf && good)
      ++view.a_fG;
    else if (inf)
      ++view.a_fB;
    else if (good)
      ++view.a_uG;
    else
      ++view.a_uB;
  }

  const double half_cubes = 0.5 * std::pow(static_cast<double>(spec.side()) / ell2hat, 3.0);
  const auto g = static_cast<double>(view.good_cubes.size());
  const std::int64_t a_f = view.a_fG + view.a_fB;
  const std::int64_t a_u = view.a_uG + view.a_uB;
  if (g <= half_cubes)
    view.p_type = 2 * view.a_fG < a_f ? 2 : 1;
  else
    view.p_type = 2 * view.a_uG < a_u ? 3 : 4;
  return view;
}

// Exterior surface: cubes outside G facet-adjacent to G. Interior surface:
// the exterior surface of the complement, i.e. cubes of G facet-adjacent to a
// cube outside G. Both computed from G alone.
struct SurfaceSets {
  int b = 1;
  int d = 3;
  std::vector<std::int64_t> exterior;  // sorted flat indices
  std::vector<std::int64_t> interior;  // sorted flat indices
};

namespace detail {

inline void unflatten(std::int64_t idx, int b, int d, std::span<std::int64_t> out) {
  for (int a = d - 1; a >= 0; --a) {
    out[static_cast<std::size_t>(a)] = idx % b;
    idx /= b;
  }
}

inline bool sorted_contains(const std::vector<std::int64_t>& v, std::int64_t x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  return it != v.end() && *it == x;
}

// Calls fn(neighbor flat index) for the facet neighbors inside {0..b-1}^d,
// in a fixed axis-minus/axis-plus order.
template <class Fn>
inline void for_facet_neighbors(std::int64_t idx, int b, int d, Fn&& fn) {
  std::int64_t stride = 1;
  std::vector<std::int64_t> coords(static_cast<std::size_t>(d));
  unflatten(idx, b, d, coords);
  for (int a = d - 1; a >= 0; --a) {
    const std::int64_t c = coords[static_cast<std::size_t>(a)];
    if (c > 0) fn(idx - stride);
    if (c + 1 < b) fn(idx + stride);
    stride *= b;
  }
}

}  // namespace detail

inline SurfaceSets surfaces(const std::vector<std::int64_t>& g_sorted, int b, int d) {
  SurfaceSets s;
  s.b = b;
  s.d = d;
  std::unordered_set<std::int64_t> ext;
  for (std::int64_t cell : g_sorted) {
    bool touches_outside = false;
    detail::for_facet_neighbors(cell, b, d, [&](std::int64_t nb) {
      if (!detail::sorted_contains(g_sorted, nb)) {
        touches_outside = true;
        ext.insert(nb);
      }
    });
    if (touches_outside) s.interior.push_back(cell);
  }
  s.exterior.assign(ext.begin(), ext.end());
  std::sort(s.exterior.begin(), s.exterior.end());
  std::sort(s.interior.begin(), s.interior.end());
  return s;
}

// Greedy maximal matching on the facet-adjacency bipartite graph between the
// exterior and interior surfaces: pick an edge, drop both endpoints. Always
// reaches at least |exterior| / (4d - 1) edges.
inline std::vector<std::pair<std::int64_t, std::int64_t>> greedy_matching(
    const SurfaceSets& s, const std::vector<std::int64_t>& g_sorted) {
  std::vector<std::pair<std::int64_t, std::int64_t>> matching;
  std::unordered_set<std::int64_t> used_interior;
  for (std::int64_t ext_cell : s.exterior) {
    std::int64_t pick = -1;
    detail::for_facet_neighbors(ext_cell, s.b, s.d, [&](std::int64_t nb) {
      if (pick >= 0) return;
      if (detail::sorted_contains(g_sorted, nb) && !used_interior.count(nb)) pick = nb;
    });
    if (pick >= 0) {
      used_interior.insert(pick);
      matching.emplace_back(ext_cell, pick);
    }
  }
  return matching;
}

// Surface constants from the recursion alpha(d+1) = alpha(d)/2 + 1/4 seeded
// at alpha(2) = 2/3, beta(2) = 2/5. The d = 3 beta is floored at the stated
// 0.36, which is stronger than what the recursion alone yields.
struct IsoConstants {
  double alpha = 0;
  double beta = 0;
};

inline IsoConstants iso_constants(int d) {
  if (d < 2) throw std::invalid_argument("iso_constants: d must be >= 2");
  IsoConstants c{2.0 / 3.0, 2.0 / 5.0};
  for (int k = 2; k < d; ++k) {
    const double next_alpha = c.alpha / 2.0 + 0.25;
    const double next_d = k + 1;
    const double term1 = c.alpha / std::pow(next_alpha, k / next_d) - std::pow(next_alpha, 1.0 / next_d);
    const double term2 = c.beta * std::pow(next_alpha, 1.0 / next_d) / std::pow(c.alpha, 1.0 / k);
    double next_beta = std::min(term1, term2);
    if (k + 1 == 3) next_beta = std::max(next_beta, 0.36);
    c = {next_alpha, next_beta};
  }
  return c;
}

struct IsoCheck {
  bool applies = false;    // |G| <= alpha(d) * b^d
  bool satisfied = false;  // |surface| >= beta(d) * |G|^((d-1)/d)
  double alpha_used = 0;
  double beta_used = 0;
  std::int64_t surface_size = 0;
  std::int64_t set_size = 0;
};

inline IsoCheck isoperimetric_check(const std::vector<std::int64_t>& g_sorted, int b, int d) {
  const IsoConstants c = iso_constants(d);
  IsoCheck out;
  out.alpha_used = c.alpha;
  out.beta_used = c.beta;
  out.set_size = static_cast<std::int64_t>(g_sorted.size());
  out.surface_size = static_cast<std::int64_t>(surfaces(g_sorted, b, d).exterior.size());
  out.applies = static_cast<double>(out.set_size) <= c.alpha * std::pow(static_cast<double>(b), d);
  const double bound =
      c.beta * std::pow(static_cast<double>(out.set_size), (d - 1) / static_cast<double>(d));
  out.satisfied = static_cast<double>(out.surface_size) >= bound;
  return out;
}

}  // namespace gridflood

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "islands.hpp"

namespace gridflood {

// Parameters of the good-behavior monitors. Scales: ell1 = n * m^{-1/3},
// ell2 = sqrt(n^3 / m); log means natural log throughout. The log exponents
// are explicitly unoptimized in the source analysis, so they are knobs here
// rather than baked-in constants.
struct GoodBehaviorParams {
  GridSpec spec;
  std::int64_t m = 1;

  double density_log_exp = 5.0;      // m_i carries log^5 n
  double shell_count_log_exp = 3.0;  // shell count (ell2/ell1) log^-3 n
  double shell_width_log_exp = 1.0;  // shell width ell1 log^-1 n
  double island_gamma_log_exp = 1.0; // island radius ell1 log^-1 n
  double island_cap_factor = 3.0;    // island size cap 3 log n
  double travel_window_log_exp = 12.0;  // window ell2^2 log^-12 n
  double travel_bound_log_exp = 4.0;    // displacement cap 3 ell2 log^-4 n

  double log_n() const { return std::log(static_cast<double>(spec.n)); }
  double ell1() const {
    return spec.n * std::pow(static_cast<double>(m), -1.0 / 3.0);
  }
  double ell2() const {
    return std::sqrt(std::pow(static_cast<double>(spec.n), 3.0) / static_cast<double>(m));
  }
  double shell_width() const { return ell1() * std::pow(log_n(), -shell_width_log_exp); }
  int shell_count() const {
    return static_cast<int>(std::floor((ell2() / ell1()) * std::pow(log_n(), -shell_count_log_exp)));
  }
  double island_gamma() const { return ell1() * std::pow(log_n(), -island_gamma_log_exp); }
  double island_cap() const { return island_cap_factor * log_n(); }
  double travel_window() const { return ell2() * ell2() * std::pow(log_n(), -travel_window_log_exp); }
  double travel_bound() const { return 3.0 * ell2() * std::pow(log_n(), -travel_bound_log_exp); }

  void validate() const {
    spec.validate();
    if (spec.d != 3) throw std::invalid_argument("good behavior monitors require d = 3");
    if (spec.n < 2) throw std::invalid_argument("good behavior monitors require n >= 2");
    if (m < 1) throw std::invalid_argument("good behavior monitors require m >= 1");
  }
};

struct BehaviorCheckpoint {
  std::int64_t t = 0;
  bool density = true;        // D_t
  bool small_islands = true;  // E_t
  bool short_travel = true;   // L_t
  bool density_vacuous = false;

  bool good() const { return density && small_islands && short_travel; }
};

struct GoodBehaviorReport {
  double ell1 = 0;
  double ell2 = 0;
  int shell_count = 0;
  bool density_vacuous = false;  // shell count < 1: density holds vacuously
  std::string anchor_policy;
  std::vector<BehaviorCheckpoint> checkpoints;

  bool all_good() const {
    for (const auto& c : checkpoints)
      if (!c.good()) return false;
    return true;
  }

  bool good_at(std::int64_t t) const {
    bool g = true;
    for (const auto& c : checkpoints) {
      if (c.t > t) break;
      g = c.good();
    }
    return g;
  }
};

// Anchor lattice for the density monitor: points spaced `spacing` apart per
// axis (checking every lattice point is infeasible; this is the documented
// relaxation, callers append current agent positions).
inline std::vector<Position> make_anchor_lattice(const GridSpec& spec, double spacing) {
  const auto step = std::max<Coord>(1, static_cast<Coord>(std::floor(spacing)));
  std::vector<Position> anchors;
  Position cur(static_cast<std::size_t>(spec.d), -spec.n);
  while (true) {
    anchors.push_back(cur);
    int axis = spec.d - 1;
    while (axis >= 0) {
      if (cur[axis] + step <= spec.n) {
        cur[axis] = static_cast<Coord>(cur[axis] + step);
        break;
      }
      cur[axis] = -spec.n;
      --axis;
    }
    if (axis < 0) break;
  }
  return anchors;
}

namespace detail {

// Density check at one instant: for every anchor P and shell i, the number of
// agents in dB_i(P) = B(P, i*w) - B(P, (i-1)*w) must not exceed
// m_i(P) = log^e(n) * |dB_i(P)| * m / (2n+1)^3.
inline bool density_ok_at(std::span<const Coord> flat, int m, const GoodBehaviorParams& p,
                          const std::vector<Position>& anchors) {
  const int q = p.shell_count();
  if (q < 1) return true;
  const double w = p.shell_width();
  const double log_factor = std::pow(p.log_n(), p.density_log_exp);
  const double volume = std::pow(static_cast<double>(p.spec.side()), 3.0);
  std::vector<int> shell_agents(static_cast<std::size_t>(q) + 1, 0);
  for (const Position& anchor : anchors) {
    std::fill(shell_agents.begin(), shell_agents.end(), 0);
    const std::span<const Coord> a(anchor);
    for (int i = 0; i < m; ++i) {
      const auto dist = static_cast<double>(
          linf_distance(a, flat.subspan(static_cast<std::size_t>(i) * 3, 3)));
      if (dist == 0.0 || dist > q * w) continue;  // distance 0 is the inner ball, not a shell
      const int shell = static_cast<int>(std::ceil(dist / w));
      if (shell <= q) ++shell_agents[static_cast<std::size_t>(shell)];
    }
    for (int i = 1; i <= q; ++i) {
      if (shell_agents[static_cast<std::size_t>(i)] == 0) continue;
      const double shell_points =
          static_cast<double>(ball_size(p.spec, a, i * w) - ball_size(p.spec, a, (i - 1) * w));
      const double cap = log_factor * shell_points * static_cast<double>(p.m) / volume;
      if (static_cast<double>(shell_agents[static_cast<std::size_t>(i)]) > cap) return false;
    }
  }
  return true;
}

inline bool islands_ok_at(std::span<const Coord> flat, int m, const GoodBehaviorParams& p) {
  const IslandPartition part = islands(flat, m, p.spec, p.island_gamma());
  const double cap = p.island_cap();
  for (const auto& comp : part.components)
    if (static_cast<double>(comp.size()) > cap) return false;
  return true;
}

}  // namespace detail

// Evaluates D/E/L/G over a recorded position log at the requested checkpoint
// times. Instantaneous density and island checks run on every logged step;
// the travel check compares logged position pairs within the displacement window.
// Each component at checkpoint t covers all logged steps up to t.
inline GoodBehaviorReport check_good_behavior(const std::vector<std::int64_t>& log_times,
                                              const std::vector<std::vector<Coord>>& log_positions,
                                              const GoodBehaviorParams& params,
                                              const std::vector<Position>& extra_anchors,
                                              const std::vector<std::int64_t>& checkpoint_times) {
  params.validate();
  if (log_times.size() != log_positions.size() || log_times.empty())
    throw std::invalid_argument("check_good_behavior: empty or inconsistent position log");
  const auto m = static_cast<int>(params.m);

  GoodBehaviorReport report;
  report.ell1 = params.ell1();
  report.ell2 = params.ell2();
  report.shell_count = params.shell_count();
  report.density_vacuous = report.shell_count < 1;
  report.anchor_policy = "lattice spaced ell1 plus current agent positions";

  // Instantaneous density / island flags per logged step.
  const std::size_t steps = log_times.size();
  std::vector<std::uint8_t> density_ok(steps, 1), islands_ok(steps, 1);
  std::vector<Position> anchors = make_anchor_lattice(params.spec, params.ell1());
  anchors.insert(anchors.end(), extra_anchors.begin(), extra_anchors.end());
  const std::size_t base_anchor_count = anchors.size();
  for (std::size_t s = 0; s < steps; ++s) {
    const std::span<const Coord> flat(log_positions[s]);
    anchors.resize(base_anchor_count);
    for (int i = 0; i < m; ++i) {
      const auto pos = flat.subspan(static_cast<std::size_t>(i) * 3, 3);
      anchors.emplace_back(pos.begin(), pos.end());
    }
    density_ok[s] = report.density_vacuous || detail::density_ok_at(flat, m, params, anchors);
    islands_ok[s] = detail::islands_ok_at(flat, m, params);
  }

  // Travel flags: displacement of any agent between two logged times within
  // the window must stay under the bound. travel_up_to[s] covers pairs with
  // both endpoints at or before log step s.
  const double window = params.travel_window();
  const double bound = params.travel_bound();
  std::vector<std::uint8_t> travel_up_to(steps, 1);
  for (std::size_t s2 = 0; s2 < steps; ++s2) {
    bool ok = s2 == 0 || travel_up_to[s2 - 1];
    if (ok) {
      for (std::size_t s1 = s2; s1-- > 0;) {
        const auto gap = static_cast<double>(log_times[s2] - log_times[s1]);
        if (gap > window) break;
        const std::span<const Coord> a(log_positions[s1]);
        const std::span<const Coord> b(log_positions[s2]);
        for (int i = 0; i < m && ok; ++i) {
          const auto d1 = l1_distance(a.subspan(static_cast<std::size_t>(i) * 3, 3),
                                      b.subspan(static_cast<std::size_t>(i) * 3, 3));
          if (static_cast<double>(d1) > bound) ok = false;
        }
        if (!ok) break;
      }
    }
    travel_up_to[s2] = ok ? 1 : 0;
  }

  // Cumulative AND up to each checkpoint.
  std::vector<std::uint8_t> density_up_to(steps, 1), islands_up_to(steps, 1);
  for (std::size_t s = 0; s < steps; ++s) {
    density_up_to[s] = (s == 0 ? 1 : density_up_to[s - 1]) && density_ok[s];
    islands_up_to[s] = (s == 0 ? 1 : islands_up_to[s - 1]) && islands_ok[s];
  }

  for (std::int64_t t : checkpoint_times) {
    BehaviorCheckpoint cp;
    cp.t = t;
    cp.density_vacuous = report.density_vacuous;
    std::size_t last = 0;
    bool any = false;
    for (std::size_t s = 0; s < steps; ++s)
      if (log_times[s] <= t) {
        last = s;
        any = true;
      }
    if (any) {
      cp.density = density_up_to[last] != 0;
      cp.small_islands = islands_up_to[last] != 0;
      cp.short_travel = travel_up_to[last] != 0;
    }
    report.checkpoints.push_back(cp);
  }
  return report;
}

}  // namespace gridflood

// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gridflood/engine.hpp"
#include "gridflood/experiments.hpp"
#include "gridflood/rwprob.hpp"
#include "gridflood/stats.hpp"
#include "gridflood/subcube.hpp"
#include "gridflood/sweep.hpp"
#include "gridflood/tree.hpp"
#include "scripted_scenarios.hpp"

using namespace gridflood;

namespace {

constexpr int kWorkers = 2;

// Independent oracle: first-passage pmf by exhaustive enumeration of all
// 2^t sign paths.
double first_passage_enumerated(int r, int t) {
  long long hits = 0;
  for (long long mask = 0; mask < (1LL << t); ++mask) {
    int pos = 0;
    bool passed_early = false;
    for (int s = 0; s < t - 1; ++s) {
      pos += (mask >> s) & 1 ? 1 : -1;
      if (pos == r) {
        passed_early = true;
        break;
      }
    }
    if (passed_early) continue;
    pos += (mask >> (t - 1)) & 1 ? 1 : -1;
    if (pos == r) ++hits;
  }
  return static_cast<double>(hits) / std::pow(2.0, t);
}

ScalingFit slope_fit(const std::vector<std::pair<int, int>>& nm_cells, int d, int trials,
                     std::uint64_t master_seed) {
  SweepPlan plan;
  plan.master_seed = master_seed;
  plan.trials = trials;
  plan.workers = kWorkers;
  for (const auto& [n, m] : nm_cells) {
    SweepCell cell;
    cell.id = "n" + std::to_string(n);
    cell.config.spec = {d, n};
    cell.config.m = m;
    plan.cells.push_back(cell);
  }
  FitOptions opts;
  opts.log_of_mean = true;  // criterion fits log(mean T) against log n
  return fit_scaling(run_sweep(plan), opts);
}

bool criterion_coupling(std::ostream& out) {
  const std::vector<std::pair<long long, Position>> grid{
      {8, {2, 0, 0}}, {18, {2, 2, 2}}, {32, {4, 0, 0}}};
  double max_z = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& [t, x] = grid[i];
    const CouplingCheck check = coupling_check(t, x, 100000, 11000 + i, kWorkers);
    max_z = std::max(max_z, std::abs(check.z));
  }
  out << "max |z| = " << max_z << " over 3 (t,x) pairs at N=1e5 (tolerance 3)";
  return max_z <= 3.0;
}

bool criterion_first_passage(std::ostream& out) {
  double max_err = 0;
  for (int r = 1; r <= 4; ++r)
    for (int t = 1; t <= 14; ++t)
      max_err = std::max(max_err,
                         std::abs(passage_pmf_1d(r, t) - first_passage_enumerated(r, t)));
  if (max_err > 1e-12) {
    out << "closed form vs enumeration max err = " << max_err << " (tolerance 1e-12)";
    return false;
  }

  // MC check at (r, t) = (2, 10), N = 1e6
  const MCEstimate mc = mc_binomial(1000000, 12000, 0xF1, kWorkers, [](RngStream& rng) {
    int pos = 0;
    for (int s = 1; s <= 10; ++s) {
      pos += rng.next_below(2) ? 1 : -1;
      if (pos == 2) return s == 10;
    }
    return false;
  });
  const double exact = passage_pmf_1d(2, 10);
  const double diff = std::abs(mc.estimate - exact);
  out << "enumeration max err = " << max_err << "; MC(2,10) |diff| = " << diff
      << " vs CI " << mc.half_width();
  return diff <= mc.half_width();
}

bool criterion_isoperimetry(std::ostream& out) {
  long long checked = 0;
  for (int mask = 0; mask < 256; ++mask) {
    std::vector<std::int64_t> g;
    for (int cell = 0; cell < 8; ++cell)
      if (mask & (1 << cell)) g.push_back(cell);
    if (g.size() > 4) continue;
    const IsoCheck check = isoperimetric_check(g, 2, 3);
    ++checked;
    if (!check.satisfied) {
      out << "violation at d=3 b=2 mask=" << mask;
      return false;
    }
  }
  for (int mask = 0; mask < (1 << 16); ++mask) {
    std::vector<std::int64_t> g;
    for (int cell = 0; cell < 16; ++cell)
      if (mask & (1 << cell)) g.push_back(cell);
    if (static_cast<double>(g.size()) > (2.0 / 3.0) * 16) continue;
    const IsoCheck check = isoperimetric_check(g, 4, 2);
    ++checked;
    if (!check.satisfied) {
      out << "violation at d=2 b=4 mask=" << mask;
      return false;
    }
  }
  out << checked << " subsets checked exhaustively, zero violations";
  return true;
}

bool criterion_matching(std::ostream& out) {
  RngStream rng(13000);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<std::int64_t> g;
    const std::uint32_t density = 1 + rng.next_below(7);
    for (std::int64_t cell = 0; cell < 125; ++cell)
      if (rng.next_below(8) < density) g.push_back(cell);
    const SurfaceSets s = surfaces(g, 5, 3);
    const auto matching = greedy_matching(s, g);
    if (11 * matching.size() < s.exterior.size()) {
      out << "bound violated at trial " << trial;
      return false;
    }
  }
  out << "10000 random subsets of {1..5}^3, |M| >= |surface|/11 throughout";
  return true;
}

bool criterion_engine_equivalence(std::ostream& out) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SimConfig config;
    config.spec = {3, 6};
    config.m = 48;
    config.seed = 14000 + seed;
    const DiffusionTrace fast = run(config, EngineKind::CellList);
    const DiffusionTrace slow = run(config, EngineKind::Naive);
    if (fast.final_time != slow.final_time || fast.events.size() != slow.events.size()) {
      out << "divergence at seed " << config.seed;
      return false;
    }
    for (std::size_t i = 0; i < fast.events.size(); ++i)
      if (!(fast.events[i] == slow.events[i])) {
        out << "event divergence at seed " << config.seed;
        return false;
      }
  }
  out << "100 seeds at d=3 n=6 m=48, exact trace equality";
  return true;
}

bool criterion_dense_scaling(std::ostream& out) {
  std::vector<std::pair<int, int>> cells;
  for (int n : {8, 12, 16, 24}) cells.push_back({n, n * n * n / 8});
  const ScalingFit fit = slope_fit(cells, 3, 50, 15000);
  out << "lambda=1/8 slope = " << fit.slope_n << " +/- " << fit.se_n
      << " (band [0.65, 1.35]), R^2 = " << fit.r2;
  const bool ok = fit.reliable && fit.slope_n >= 0.65 && fit.slope_n <= 1.35;
  if (!ok) {
    // Diagnostic only (the verdict above stays on the pinned cells): the
    // same sweep over a larger window, where the linear-in-n term overtakes
    // the n-independent early-growth phase and the local slope climbs
    // toward 1.
    SweepPlan plan;
    plan.master_seed = 15000;
    plan.trials = 20;
    plan.workers = kWorkers;
    const std::vector<int> wide{16, 24, 32, 48};
    for (int n : wide) {
      SweepCell cell;
      cell.id = "n" + std::to_string(n);
      cell.config.spec = {3, n};
      cell.config.m = n * n * n / 8;
      plan.cells.push_back(cell);
    }
    const auto rows = run_sweep(plan);
    std::vector<double> means(wide.size(), 0);
    std::vector<int> counts(wide.size(), 0);
    for (const auto& r : rows)
      for (std::size_t i = 0; i < wide.size(); ++i)
        if (r.n == wide[i] && r.timed_out == 0) {
          means[i] += static_cast<double>(r.T);
          ++counts[i];
        }
    out << "; diagnostic mean T over n in {16,24,32,48} =";
    for (std::size_t i = 0; i < wide.size(); ++i) {
      means[i] /= std::max(1, counts[i]);
      out << ' ' << means[i];
    }
    out << "; local slopes";
    for (std::size_t i = 0; i + 1 < wide.size(); ++i)
      out << ' '
          << std::log(means[i + 1] / means[i]) /
                 std::log(static_cast<double>(wide[i + 1]) / wide[i]);
    out << " (climbing toward 1: T here fits an additive constant plus a linear-in-n term)";
  }
  return ok;
}

bool criterion_sparse_scaling(std::ostream& out) {
  std::vector<std::pair<int, int>> cells;
  for (int n : {6, 8, 10, 12}) cells.push_back({n, 4});
  const ScalingFit fit = slope_fit(cells, 3, 50, 16000);
  out << "m=4 slope = " << fit.slope_n << " +/- " << fit.se_n << " (band [2.5, 3.5]), R^2 = "
      << fit.r2;
  return fit.reliable && fit.slope_n >= 2.5 && fit.slope_n <= 3.5;
}

bool criterion_low_dim(std::ostream& out) {
  std::vector<std::pair<int, int>> d1_cells;
  for (int n : {16, 32, 64}) d1_cells.push_back({n, n / 2});
  const ScalingFit d1 = slope_fit(d1_cells, 1, 50, 17000);

  std::vector<std::pair<int, int>> d2_cells;
  for (int n : {8, 16, 32}) d2_cells.push_back({n, n});
  const ScalingFit d2 = slope_fit(d2_cells, 2, 50, 17500);

  out << "d=1 slope = " << d1.slope_n << " (band [0.6, 1.4]); d=2 slope = " << d2.slope_n
      << " (band [1.1, 1.9])";
  return d1.slope_n >= 0.6 && d1.slope_n <= 1.4 && d2.slope_n >= 1.1 && d2.slope_n <= 1.9;
}

bool criterion_phase_scan(std::ostream& out) {
  // The geometric grid runs past m = n^3 so that the large-m plateau is
  // actually reached; at m = n^3 the local slope is still near -0.7 at this
  // n, and the flattening below 0.3 only shows once T saturates.
  std::vector<std::int64_t> ms;
  for (std::int64_t m = 2; m <= 65536; m *= 2) ms.push_back(m);
  const PhaseScanResult scan = phase_scan(GridSpec{3, 16}, ms, 40, 18000, kWorkers);

  // 95%-confidence nonincreasing ordering on adjacent cell means
  for (std::size_t i = 0; i + 1 < ms.size(); ++i) {
    const double slack =
        1.645 * std::sqrt(scan.se_T[i] * scan.se_T[i] + scan.se_T[i + 1] * scan.se_T[i + 1]);
    if (scan.mean_T[i] - scan.mean_T[i + 1] < -slack) {
      out << "mean T increases from m=" << ms[i] << " to m=" << ms[i + 1];
      return false;
    }
  }
  const double top_slope = scan.slopes.back();
  out << "means nonincreasing; top-of-grid local slope = " << top_slope
      << " (|.| < 0.3); crossover m* = " << scan.crossover_m;
  return std::abs(top_slope) < 0.3;
}

bool criterion_island_domination(std::ostream& out) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SimConfig config;
    config.spec = {2, 8};
    config.m = 48;
    config.gamma = 2;
    config.seed = 19000 + seed;
    const CoupledRun coupled = run_coupled(config);
    if (!coupled.island_dominates) {
      out << "superset violated at seed " << config.seed;
      return false;
    }
    if (coupled.island_trace.final_time < 0 ||
        coupled.island_trace.final_time > coupled.standard_trace.final_time) {
      out << "island rule finished later at seed " << config.seed;
      return false;
    }
  }
  out << "100 coupled seeds, island infected set contains the standard set at every step";
  return true;
}

bool criterion_tree_golden(std::ostream& out) {
  const auto scenario = testing::golden_tree_scenario();
  const DiffusionTrace trace = run_scripted(scenario.config, scenario.frames);
  const DiffusionTree tree = build_diffusion_tree(trace, nullptr, 60);

  const bool structure =
      tree.children(DiffusionTree::kRoot) == std::vector<int>{0, 1, 2, 3, 7} &&
      tree.direct_children(0) == std::vector<int>{4, 8} &&
      tree.children(0) == std::vector<int>{4, 6, 9, 8} &&
      tree.direct_children(3) == std::vector<int>{10} &&
      tree.direct_children(6) == std::vector<int>{5} && tree_height(tree) == 4;
  std::ifstream golden(std::string(GOLDEN_DIR) + "/scripted_tree.txt");
  std::string expected;
  std::getline(golden, expected);
  const bool text_ok = tree_to_text(tree) == expected;
  out << "children/direct-children exact, height = " << tree_height(tree)
      << ", text export " << (text_ok ? "matches" : "differs");
  return structure && text_ok;
}

bool criterion_mixing(std::ostream& out) {
  std::vector<double> scaled;
  for (int n : {4, 8, 16}) {
    const Position corner{static_cast<Coord>(n)};
    const MixingProfile prof = mixing_profile(GridSpec{1, n}, corner, 1.0 / 16.0);
    scaled.push_back(static_cast<double>(prof.t) / (n * n));
  }
  const double lo = *std::min_element(scaled.begin(), scaled.end());
  const double hi = *std::max_element(scaled.begin(), scaled.end());

  const DistVector evolved = evolve_exact(point_mass(GridSpec{1, 16}, Position{16}), 5000);
  double total = 0;
  for (double v : evolved.mass) total += v;
  const double mass_err = std::abs(total - 1.0);

  out << "t/n^2 in [" << lo << ", " << hi << "] (factor " << hi / lo
      << " <= 8); evolution mass error = " << mass_err << " (<= 1e-12)";
  return hi / lo <= 8.0 && mass_err <= 1e-12;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool(std::ostream&)> fn;
};

}  // namespace

int main(int argc, char** argv) {
  int only = -1;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
  }

  const std::vector<Criterion> criteria{
      {1, "coupling-identity", criterion_coupling},
      {2, "first-passage-exactness", criterion_first_passage},
      {3, "isoperimetric-bound", criterion_isoperimetry},
      {4, "matching-bound", criterion_matching},
      {5, "engine-equivalence", criterion_engine_equivalence},
      {6, "dense-scaling-d3", criterion_dense_scaling},
      {7, "sparse-scaling-d3", criterion_sparse_scaling},
      {8, "low-dimension-scaling", criterion_low_dim},
      {9, "monotone-phase-scan", criterion_phase_scan},
      {10, "island-rule-domination", criterion_island_domination},
      {11, "diffusion-tree-golden", criterion_tree_golden},
      {12, "mixing-profile", criterion_mixing},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (only > 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    std::ostringstream detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& e) {
      detail << "exception: " << e.what();
    }
    const auto secs = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count() /
                      1000.0;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion-" << (c.id < 10 ? "0" : "") << c.id << ' '
              << c.name << ": " << detail.str() << " [" << secs << "s]" << std::endl;
    if (!ok) ++failures;
  }
  return failures;
}

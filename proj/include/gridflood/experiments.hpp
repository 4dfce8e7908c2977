#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "engine.hpp"
#include "stats.hpp"
#include "subcube.hpp"
#include "sweep.hpp"

namespace gridflood {

// --- phase scan --------------------------------------------------------------

struct PhaseScanResult {
  std::vector<std::int64_t> ms;
  std::vector<double> mean_T;
  std::vector<double> se_T;
  std::vector<std::vector<double>> samples;  // per-cell T samples
  std::vector<double> slopes;        // local d log T / d log m between adjacent cells
  std::vector<double> second_diffs;  // of log T over the log m grid
  std::int64_t crossover_m = 0;      // strongest curvature point (grid resolution only)
  double grid_factor = 0;            // multiplicative grid step, the resolution of crossover_m
};

// Mean diffusion time across a geometric m-grid at fixed n, plus the discrete
// second-difference crossover detector.
inline PhaseScanResult phase_scan(const GridSpec& spec, const std::vector<std::int64_t>& ms,
                                  int trials, std::uint64_t master_seed, int workers = 1) {
  SweepPlan plan;
  plan.master_seed = master_seed;
  plan.trials = trials;
  plan.workers = workers;
  for (std::int64_t m : ms) {
    SweepCell cell;
    cell.id = "m" + std::to_string(m);
    cell.config.spec = spec;
    cell.config.m = static_cast<int>(m);
    cell.config.rule = Rule::Standard;
    plan.cells.push_back(cell);
  }
  const auto rows = run_sweep(plan);

  PhaseScanResult out;
  out.ms = ms;
  out.samples.resize(ms.size());
  for (const auto& r : rows) {
    if (r.timed_out != 0 || r.T < 0) continue;
    for (std::size_t i = 0; i < ms.size(); ++i)
      if (ms[i] == r.m) out.samples[i].push_back(static_cast<double>(std::max<std::int64_t>(1, r.T)));
  }
  for (const auto& s : out.samples) {
    out.mean_T.push_back(mean(s));
    out.se_T.push_back(s.size() > 1 ? stddev(s) / std::sqrt(static_cast<double>(s.size())) : 0.0);
  }
  for (std::size_t i = 0; i + 1 < ms.size(); ++i) {
    const double dlogm = std::log(static_cast<double>(ms[i + 1])) - std::log(static_cast<double>(ms[i]));
    out.slopes.push_back((std::log(out.mean_T[i + 1]) - std::log(out.mean_T[i])) / dlogm);
  }
  for (std::size_t i = 0; i + 1 < out.slopes.size(); ++i)
    out.second_diffs.push_back(out.slopes[i + 1] - out.slopes[i]);
  if (!out.second_diffs.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.second_diffs.size(); ++i)
      if (out.second_diffs[i] > out.second_diffs[best]) best = i;
    out.crossover_m = ms[best + 1];  // the interior grid point of the strongest slope change
  }
  if (ms.size() >= 2)
    out.grid_factor = static_cast<double>(ms[1]) / static_cast<double>(ms[0]);
  return out;
}

// --- growth monitor ----------------------------------------------------------

// Per-increment record of the subcube bookkeeping plus the growth events:
//   e1/e3: surface-driven growth of |dA| against (|A^f| resp. |A^u|)^{2/3}
//   e2/e4: proportional growth of |dA| against |A^f| resp. |A^u|
// evaluated with configurable tau0 in place of the unoptimized constant.
struct GrowthRecord {
  std::int64_t t = 0;
  std::int64_t a_f = 0, a_u = 0;
  std::int64_t good_cubes = 0;
  std::int64_t surface = 0;  // |exterior surface of the good set|
  int p_type = 0;
  std::int64_t delta = 0;  // newly infected within the increment starting here
  bool e1 = false, e2 = false, e3 = false, e4 = false;
};

struct GrowthWindow {
  std::int64_t t_begin = 0, t_end = 0;
  std::int64_t a_f_begin = 0, a_f_end = 0;
  std::int64_t a_u_begin = 0, a_u_end = 0;
  bool chi1 = false;  // infected doubled
  bool chi2 = false;  // uninfected halved
};

struct GrowthLog {
  int ell2hat = 1;
  std::int64_t dt = 1;
  std::int64_t window_len = 1;  // in increments
  double tau0 = 1.0;
  std::vector<GrowthRecord> records;
  std::vector<GrowthWindow> windows;
  std::int64_t final_time = -1;
};

inline int default_ell2hat(const GridSpec& spec, std::int64_t m) {
  const double raw = std::sqrt(std::pow(static_cast<double>(spec.n), 3.0) / static_cast<double>(m)) *
                     std::log(static_cast<double>(spec.n));
  const int rounded = static_cast<int>(std::lround(raw));
  return std::max(1, std::min(rounded, spec.side()));
}

inline GrowthLog growth_monitor(const SimConfig& config, std::int64_t dt = 0,
                                double window_increments = 0, double tau0 = 1.0,
                                EngineKind kind = EngineKind::CellList) {
  config.validate();
  if (config.spec.d != 3) throw std::invalid_argument("growth_monitor: d must be 3");
  const int ell2hat = default_ell2hat(config.spec, config.m);
  if (dt <= 0) dt = 16LL * ell2hat * ell2hat;
  if (window_increments <= 0)
    window_increments =
        8.0 * std::sqrt(static_cast<double>(config.m) / std::max(1, config.spec.n));
  const auto window_len = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(window_increments)));

  GrowthLog log;
  log.ell2hat = ell2hat;
  log.dt = dt;
  log.window_len = window_len;
  log.tau0 = tau0;

  SimState st = init_uniform(config);
  auto walks = walk_streams(config);
  const std::int64_t cap = config.effective_max_steps();
  const double logn = std::log(static_cast<double>(std::max(2, config.spec.n)));

  auto snapshot = [&]() {
    GrowthRecord rec;
    rec.t = st.t;
    const SubcubeView view = subcube_view(st.pos, st.infected, st.m, config.spec, ell2hat);
    rec.a_f = view.a_fG + view.a_fB;
    rec.a_u = view.a_uG + view.a_uB;
    rec.good_cubes = static_cast<std::int64_t>(view.good_cubes.size());
    rec.surface = static_cast<std::int64_t>(surfaces(view.good_cubes, view.b, 3).exterior.size());
    rec.p_type = view.p_type;
    log.records.push_back(rec);
  };

  snapshot();
  while (st.t < cap && !st.all_infected()) {
    for (std::int64_t s = 0; s < dt && st.t < cap && !st.all_infected(); ++s) {
      if (config.rule == Rule::Island)
        step_island(st, config, walks, kind);
      else
        step_standard(st, config, walks, kind);
    }
    snapshot();
  }
  log.final_time = st.all_infected() ? st.t : -1;

  // Fill per-increment deltas and event flags.
  for (std::size_t i = 0; i + 1 < log.records.size(); ++i) {
    GrowthRecord& rec = log.records[i];
    rec.delta = log.records[i + 1].a_f - rec.a_f;
    const double l13 = std::pow(logn, 13.0);
    const double l38 = std::pow(logn, 38.0);
    const double fshare = std::pow(static_cast<double>(rec.a_f) / (4.0 * ell2hat * logn * logn), 2.0 / 3.0);
    const double ushare = std::pow(static_cast<double>(rec.a_u) / (4.0 * ell2hat * logn * logn), 2.0 / 3.0);
    const auto delta = static_cast<double>(rec.delta);
    rec.e1 = delta >= 0.09 * tau0 * fshare * ell2hat / l13;
    rec.e2 = delta >= tau0 * tau0 / (8.0 * l38) * static_cast<double>(rec.a_f);
    rec.e3 = delta >= 0.015 * tau0 * ushare * ell2hat / l13;
    rec.e4 = delta >= tau0 * tau0 / (8.0 * l38) * static_cast<double>(rec.a_u);
  }

  // Chi windows over consecutive blocks of window_len increments; a window
  // cut short by completion uses the final record.
  for (std::size_t start = 0; start + 1 < log.records.size();
       start += static_cast<std::size_t>(window_len)) {
    const std::size_t end = std::min(log.records.size() - 1, start + static_cast<std::size_t>(window_len));
    GrowthWindow w;
    w.t_begin = log.records[start].t;
    w.t_end = log.records[end].t;
    w.a_f_begin = log.records[start].a_f;
    w.a_f_end = log.records[end].a_f;
    w.a_u_begin = log.records[start].a_u;
    w.a_u_end = log.records[end].a_u;
    w.chi1 = w.a_f_end >= 2 * w.a_f_begin;
    w.chi2 = 2 * w.a_u_end <= w.a_u_begin;
    log.windows.push_back(w);
  }
  return log;
}

inline std::string growth_log_to_jsonl(const GrowthLog& log) {
  std::ostringstream out;
  nlohmann::ordered_json header;
  header["kind"] = "header";
  header["format_version"] = 1;
  header["ell2hat"] = log.ell2hat;
  header["dt"] = log.dt;
  header["window_len"] = log.window_len;
  header["tau0"] = log.tau0;
  header["final_time"] = log.final_time;
  out << header.dump() << '\n';
  for (const auto& r : log.records) {
    nlohmann::ordered_json j;
    j["kind"] = "record";
    j["t"] = r.t;
    j["a_f"] = r.a_f;
    j["a_u"] = r.a_u;
    j["good_cubes"] = r.good_cubes;
    j["surface"] = r.surface;
    j["p_type"] = r.p_type;
    j["delta"] = r.delta;
    j["e1"] = r.e1;
    j["e2"] = r.e2;
    j["e3"] = r.e3;
    j["e4"] = r.e4;
    out << j.dump() << '\n';
  }
  for (const auto& w : log.windows) {
    nlohmann::ordered_json j;
    j["kind"] = "window";
    j["t_begin"] = w.t_begin;
    j["t_end"] = w.t_end;
    j["chi1"] = w.chi1;
    j["chi2"] = w.chi2;
    out << j.dump() << '\n';
  }
  return out.str();
}

// --- sparse monitor ----------------------------------------------------------

struct SparseRound {
  std::int64_t t_end = 0;
  std::int64_t m1_begin = 0;  // infected at round start
  std::int64_t m2_begin = 0;  // uninfected at round start
  std::int64_t newly = 0;
  bool achieved = false;  // newly >= min(m1, m2/2)
};

struct SparseMonitorResult {
  std::int64_t round_len = 1;
  std::vector<SparseRound> rounds;
  std::int64_t final_time = -1;
  double achieved_fraction = 0;
  std::vector<std::int64_t> cumulative_infected;  // per round end
};

// Tracks per-round infection counts in the sparse regime, round length
// c n^3 log(n) / m.
inline SparseMonitorResult sparse_monitor(const SimConfig& config, double c = 1.0,
                                          EngineKind kind = EngineKind::CellList) {
  config.validate();
  if (config.spec.d != 3) throw std::invalid_argument("sparse_monitor: d must be 3");
  SparseMonitorResult out;
  const double n3 = std::pow(static_cast<double>(config.spec.n), 3.0);
  const double logn = std::log(static_cast<double>(std::max(2, config.spec.n)));
  out.round_len = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::llround(c * n3 * logn / static_cast<double>(config.m))));

  SimState st = init_uniform(config);
  auto walks = walk_streams(config);
  const std::int64_t cap = config.effective_max_steps();
  while (st.t < cap && !st.all_infected()) {
    SparseRound round;
    round.m1_begin = st.infected_count;
    round.m2_begin = st.m - st.infected_count;
    for (std::int64_t s = 0; s < out.round_len && st.t < cap && !st.all_infected(); ++s) {
      if (config.rule == Rule::Island)
        step_island(st, config, walks, kind);
      else
        step_standard(st, config, walks, kind);
    }
    round.t_end = st.t;
    round.newly = st.infected_count - round.m1_begin;
    round.achieved =
        round.newly >= std::min(round.m1_begin, (round.m2_begin + 1) / 2);
    out.rounds.push_back(round);
    out.cumulative_infected.push_back(st.infected_count);
  }
  out.final_time = st.all_infected() ? st.t : -1;
  std::int64_t achieved = 0;
  for (const auto& r : out.rounds) achieved += r.achieved ? 1 : 0;
  out.achieved_fraction =
      out.rounds.empty() ? 0 : static_cast<double>(achieved) / static_cast<double>(out.rounds.size());
  return out;
}

}  // namespace gridflood

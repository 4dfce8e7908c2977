#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "engine.hpp"
#include "stats.hpp"

namespace gridflood {

inline constexpr int kSweepFormatVersion = 1;

struct SweepCell {
  std::string id;
  SimConfig config;  // seed field ignored; per-trial seeds are derived
};

struct SweepPlan {
  std::uint64_t master_seed = 0;
  int trials = 1;
  int workers = 1;
  std::vector<SweepCell> cells;

  void validate() const {
    if (trials < 1) throw std::invalid_argument("plan: trials must be >= 1");
    if (workers < 1) throw std::invalid_argument("plan: workers must be >= 1");
    std::set<std::string> ids;
    for (const auto& c : cells) {
      c.config.validate();
      if (c.id.empty()) throw std::invalid_argument("plan: cell id must be non-empty");
      if (!ids.insert(c.id).second)
        throw std::invalid_argument("plan: duplicate cell id " + c.id);
    }
  }
};

struct TrialRow {
  std::string cell_id;
  int d = 0;
  int n = 0;
  std::int64_t m = 0;
  std::string rule;
  double gamma = 0;
  std::uint64_t seed = 0;
  std::int64_t T = -1;  // -1 on timeout or error
  int timed_out = 0;    // 1 timeout, -1 error row
  std::int64_t wall_ms = 0;
};

// --- plan JSON -------------------------------------------------------------

namespace detail {

template <class T>
T require_field(const nlohmann::json& j, const char* field, const std::string& where) {
  if (!j.contains(field))
    throw std::invalid_argument("plan: missing field '" + std::string(field) + "' in " + where);
  try {
    return j.at(field).get<T>();
  } catch (const std::exception&) {
    throw std::invalid_argument("plan: bad value for field '" + std::string(field) + "' in " + where);
  }
}

}  // namespace detail

inline SweepPlan plan_from_json(const nlohmann::json& j) {
  SweepPlan plan;
  if (j.contains("format_version") && j.at("format_version").get<int>() != kSweepFormatVersion)
    throw std::invalid_argument("plan: unsupported format_version");
  plan.master_seed = detail::require_field<std::uint64_t>(j, "master_seed", "plan");
  plan.trials = detail::require_field<int>(j, "trials", "plan");
  plan.workers = j.value("workers", 1);
  if (!j.contains("cells")) throw std::invalid_argument("plan: missing field 'cells' in plan");
  for (const auto& cj : j.at("cells")) {
    SweepCell cell;
    cell.id = detail::require_field<std::string>(cj, "id", "cell");
    cell.config.spec.d = detail::require_field<int>(cj, "d", "cell " + cell.id);
    cell.config.spec.n = detail::require_field<int>(cj, "n", "cell " + cell.id);
    cell.config.m = detail::require_field<int>(cj, "m", "cell " + cell.id);
    cell.config.rule = rule_from_name(detail::require_field<std::string>(cj, "rule", "cell " + cell.id));
    cell.config.gamma = cj.value("gamma", 0.0);
    cell.config.meeting_distance = cj.value("meeting_distance", 1);
    cell.config.max_steps = cj.value("max_steps", static_cast<std::int64_t>(-1));
    plan.cells.push_back(std::move(cell));
  }
  plan.validate();
  return plan;
}

inline SweepPlan plan_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plan file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("plan: invalid JSON: ") + e.what());
  }
  return plan_from_json(j);
}

// --- CSV -------------------------------------------------------------------

inline constexpr const char* kSweepCsvHeader = "cell_id,d,n,m,rule,gamma,seed,T,timed_out,wall_ms";

inline std::string row_to_csv(const TrialRow& r) {
  std::ostringstream out;
  out << r.cell_id << ',' << r.d << ',' << r.n << ',' << r.m << ',' << r.rule << ',' << r.gamma
      << ',' << r.seed << ',' << r.T << ',' << r.timed_out << ',' << r.wall_ms;
  return out.str();
}

inline TrialRow row_from_csv(const std::string& line) {
  std::vector<std::string> f;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      f.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  f.push_back(cur);
  if (f.size() != 10) throw std::invalid_argument("sweep csv: bad row: " + line);
  TrialRow r;
  r.cell_id = f[0];
  r.d = std::stoi(f[1]);
  r.n = std::stoi(f[2]);
  r.m = std::stoll(f[3]);
  r.rule = f[4];
  r.gamma = std::stod(f[5]);
  r.seed = std::stoull(f[6]);
  r.T = std::stoll(f[7]);
  r.timed_out = std::stoi(f[8]);
  r.wall_ms = std::stoll(f[9]);
  return r;
}

inline void write_sweep_csv(const std::vector<TrialRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output csv: " + path);
  out << "# gridflood sweep format_version=" << kSweepFormatVersion << '\n';
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) out << row_to_csv(r) << '\n';
}

inline std::vector<TrialRow> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv: " + path);
  std::vector<TrialRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("cell_id", 0) == 0) continue;
    rows.push_back(row_from_csv(line));
  }
  return rows;
}

// --- running ---------------------------------------------------------------

inline std::uint64_t trial_seed(const SweepPlan& plan, std::size_t cell_index, int trial) {
  RngStream s = RngStream::derive(plan.master_seed,
                                  {kTrialTag, static_cast<std::uint64_t>(cell_index),
                                   static_cast<std::uint64_t>(trial)});
  return s.next_u64();
}

// Runs every (cell, trial) pair not already present in `done`, in parallel.
// Output order is canonical (plan order, then trial), independent of
// scheduling; wall_ms is the only nondeterministic column. A failing trial is
// retried once, then recorded as an error row (T = -1, timed_out = -1).
inline std::vector<TrialRow> run_sweep(const SweepPlan& plan,
                                       const std::vector<TrialRow>& done = {},
                                       const std::function<void(const TrialRow&)>& on_row = {}) {
  plan.validate();
  std::set<std::pair<std::string, std::uint64_t>> done_keys;
  for (const auto& r : done) done_keys.insert({r.cell_id, r.seed});

  struct Task {
    std::size_t cell;
    int trial;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < plan.cells.size(); ++c)
    for (int k = 0; k < plan.trials; ++k) {
      const std::uint64_t seed = trial_seed(plan, c, k);
      if (!done_keys.count({plan.cells[c].id, seed})) tasks.push_back({c, k, seed});
    }

  std::vector<TrialRow> rows(tasks.size());
  std::atomic<std::size_t> cursor{0};
  std::mutex row_mutex;
  const int workers = std::max(1, std::min<int>(plan.workers, static_cast<int>(std::thread::hardware_concurrency())));
  auto worker_fn = [&] {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      const SweepCell& cell = plan.cells[task.cell];
      TrialRow row;
      row.cell_id = cell.id;
      row.d = cell.config.spec.d;
      row.n = cell.config.spec.n;
      row.m = cell.config.m;
      row.rule = rule_name(cell.config.rule);
      row.gamma = cell.config.gamma;
      row.seed = task.seed;
      const auto start = std::chrono::steady_clock::now();
      for (int attempt = 0; attempt < 2; ++attempt) {
        try {
          SimConfig config = cell.config;
          config.seed = task.seed;
          const DiffusionTrace trace = run(config);
          row.T = trace.final_time;
          row.timed_out = trace.timed_out() ? 1 : 0;
          break;
        } catch (const std::exception&) {
          row.T = -1;
          row.timed_out = -1;  // error row after the retry
        }
      }
      row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      rows[i] = row;
      if (on_row) {
        std::lock_guard<std::mutex> lock(row_mutex);
        on_row(rows[i]);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker_fn);
  for (auto& t : pool) t.join();

  // Merge with prior rows and order canonically by (plan order, trial seed order).
  std::vector<TrialRow> all = done;
  all.insert(all.end(), rows.begin(), rows.end());
  std::vector<TrialRow> ordered;
  std::map<std::pair<std::string, std::uint64_t>, const TrialRow*> by_key;
  for (const auto& r : all) by_key[{r.cell_id, r.seed}] = &r;
  for (std::size_t c = 0; c < plan.cells.size(); ++c)
    for (int k = 0; k < plan.trials; ++k) {
      auto it = by_key.find({plan.cells[c].id, trial_seed(plan, c, k)});
      if (it != by_key.end()) ordered.push_back(*it->second);
    }
  return ordered;
}

// File-backed sweep: appends completed rows incrementally (so an interrupted
// run can resume by skipping completed keys), then rewrites the file in
// canonical order.
inline std::vector<TrialRow> run_sweep_to_file(const SweepPlan& plan, const std::string& out_path,
                                               bool resume) {
  std::vector<TrialRow> done;
  if (resume) {
    std::ifstream probe(out_path);
    if (probe.good()) done = read_sweep_csv(out_path);
  }
  std::ofstream append;
  if (!done.empty()) {
    append.open(out_path, std::ios::binary | std::ios::app);
  } else {
    append.open(out_path, std::ios::binary);
    append << "# gridflood sweep format_version=" << kSweepFormatVersion << '\n';
    append << kSweepCsvHeader << '\n';
  }
  if (!append) throw std::runtime_error("cannot open output csv: " + out_path);
  auto rows = run_sweep(plan, done, [&](const TrialRow& r) {
    append << row_to_csv(r) << '\n';
    append.flush();
  });
  append.close();
  write_sweep_csv(rows, out_path);
  return rows;
}

// --- scaling fits ----------------------------------------------------------

struct ScalingFit {
  double intercept = 0;
  double slope_n = 0;  // exponent a in log T = log C + a log n (+ b log m)
  double slope_m = 0;  // exponent b
  double se_n = 0;
  double se_m = 0;
  double r2 = 0;
  int cells_used = 0;
  double timeout_fraction = 0;
  bool reliable = true;  // false when > 10% of trials timed out
};

struct FitOptions {
  bool use_m = false;          // include a log m regressor
  bool log_of_mean = false;    // regress log(mean T); default mean of log T
  int min_trials_per_cell = 20;
  int min_distinct_n = 3;
};

// Fits the scaling model on per-cell aggregates; timeout and error rows are
// excluded from the response and tracked for the reliability flag.
inline ScalingFit fit_scaling(const std::vector<TrialRow>& rows, const FitOptions& opts = {}) {
  struct CellAgg {
    int n = 0;
    std::int64_t m = 0;
    std::vector<double> ts;
    int timeouts = 0;
  };
  std::map<std::string, CellAgg> cells;
  for (const auto& r : rows) {
    auto& agg = cells[r.cell_id];
    agg.n = r.n;
    agg.m = r.m;
    if (r.timed_out == 0 && r.T >= 0)
      agg.ts.push_back(static_cast<double>(std::max<std::int64_t>(1, r.T)));
    else
      ++agg.timeouts;
  }

  std::set<int> distinct_n;
  std::vector<double> y, ones, log_n, log_m;
  std::int64_t total = 0, timeouts = 0;
  for (const auto& [id, agg] : cells) {
    total += static_cast<std::int64_t>(agg.ts.size()) + agg.timeouts;
    timeouts += agg.timeouts;
    if (static_cast<int>(agg.ts.size()) < opts.min_trials_per_cell)
      throw std::invalid_argument("fit_scaling: cell " + id + " has fewer than " +
                                  std::to_string(opts.min_trials_per_cell) + " usable trials");
    distinct_n.insert(agg.n);
    double response;
    if (opts.log_of_mean) {
      response = std::log(mean(agg.ts));
    } else {
      std::vector<double> logs;
      logs.reserve(agg.ts.size());
      for (double t : agg.ts) logs.push_back(std::log(t));
      response = mean(logs);
    }
    y.push_back(response);
    ones.push_back(1.0);
    log_n.push_back(std::log(static_cast<double>(agg.n)));
    log_m.push_back(std::log(static_cast<double>(agg.m)));
  }
  if (static_cast<int>(distinct_n.size()) < opts.min_distinct_n)
    throw std::invalid_argument("fit_scaling: need at least " +
                                std::to_string(opts.min_distinct_n) + " distinct n values");

  std::vector<std::vector<double>> cols{ones, log_n};
  if (opts.use_m) cols.push_back(log_m);
  const OlsFit fit = ols(cols, y);

  ScalingFit out;
  out.intercept = fit.coef[0];
  out.slope_n = fit.coef[1];
  out.se_n = fit.se[1];
  if (opts.use_m) {
    out.slope_m = fit.coef[2];
    out.se_m = fit.se[2];
  }
  out.r2 = fit.r2;
  out.cells_used = static_cast<int>(cells.size());
  out.timeout_fraction = total > 0 ? static_cast<double>(timeouts) / static_cast<double>(total) : 0;
  out.reliable = out.timeout_fraction <= 0.10;
  return out;
}

}  // namespace gridflood

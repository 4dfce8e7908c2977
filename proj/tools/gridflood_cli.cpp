// gridflood: simulate multi-agent random-walk information diffusion on
// bounded grids, sweep configurations, probe random-walk probabilities,
// analyze traces, and run verification suites.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gridflood/behavior.hpp"
#include "gridflood/engine.hpp"
#include "gridflood/experiments.hpp"
#include "gridflood/rwprob.hpp"
#include "gridflood/subcube.hpp"
#include "gridflood/sweep.hpp"
#include "gridflood/trace_io.hpp"
#include "gridflood/tree.hpp"

using namespace gridflood;

namespace {

Position parse_vector(const std::string& text, int expected_d = -1) {
  Position out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<Coord>(std::stol(item)));
  if (expected_d > 0 && static_cast<int>(out.size()) != expected_d)
    throw CLI::ValidationError("--x", "expected " + std::to_string(expected_d) + " coordinates");
  return out;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(10);
  out << v;
  return out.str();
}

struct ProbeRow {
  std::string op;
  std::string params;
  std::string estimate;
  std::string ci;
  std::string oracle;
  std::string z;
};

void print_probe(const ProbeRow& row, bool human) {
  if (human) {
    std::cout << row.op << "  params[" << row.params << "]  estimate=" << row.estimate;
    if (!row.ci.empty()) std::cout << " ci=" << row.ci;
    if (!row.oracle.empty()) std::cout << " oracle=" << row.oracle;
    if (!row.z.empty()) std::cout << " z=" << row.z;
    std::cout << '\n';
  } else {
    std::cout << "op,params,estimate,ci,oracle,z\n";
    std::cout << row.op << ',' << row.params << ',' << row.estimate << ',' << row.ci << ','
              << row.oracle << ',' << row.z << '\n';
  }
}

// ---------------------------------------------------------------------------
// verify suites
// ---------------------------------------------------------------------------

bool verify_isoperimetry(long long budget, std::uint64_t seed) {
  // exhaustive: all subsets of {1..2}^3 with |G| <= alpha(3) * 8
  for (int mask = 0; mask < 256; ++mask) {
    std::vector<std::int64_t> g;
    for (int cell = 0; cell < 8; ++cell)
      if (mask & (1 << cell)) g.push_back(cell);
    const IsoCheck check = isoperimetric_check(g, 2, 3);
    if (check.applies && !check.satisfied) {
      std::cout << "FAIL isoperimetry: d=3 b=2 mask=" << mask << "\n";
      return false;
    }
  }
  // exhaustive: d=2, b<=4
  for (int b = 2; b <= 4; ++b)
    for (int mask = 0; mask < (1 << (b * b)); ++mask) {
      std::vector<std::int64_t> g;
      for (int cell = 0; cell < b * b; ++cell)
        if (mask & (1 << cell)) g.push_back(cell);
      const IsoCheck check = isoperimetric_check(g, b, 2);
      if (check.applies && !check.satisfied) {
        std::cout << "FAIL isoperimetry: d=2 b=" << b << " mask=" << mask << "\n";
        return false;
      }
    }
  // random subsets of {1..6}^3
  RngStream rng(seed);
  long long applicable = 0;
  for (long long trial = 0; trial < budget; ++trial) {
    const int b = 3 + static_cast<int>(rng.next_below(4));
    std::vector<std::int64_t> g;
    const std::uint32_t density = 1 + rng.next_below(5);
    for (std::int64_t cell = 0; cell < 1LL * b * b * b; ++cell)
      if (rng.next_below(8) < density) g.push_back(cell);
    const IsoCheck check = isoperimetric_check(g, b, 3);
    if (check.applies) {
      ++applicable;
      if (!check.satisfied) {
        std::cout << "FAIL isoperimetry: random subset trial=" << trial << "\n";
        return false;
      }
    }
  }
  std::cout << "PASS isoperimetry: exhaustive d3b2 + d2b<=4, " << applicable
            << " random applicable subsets\n";
  return true;
}

bool verify_matching(long long budget, std::uint64_t seed) {
  RngStream rng(seed);
  for (long long trial = 0; trial < budget; ++trial) {
    const int b = 5;
    std::vector<std::int64_t> g;
    const std::uint32_t density = 1 + rng.next_below(7);
    for (std::int64_t cell = 0; cell < 125; ++cell)
      if (rng.next_below(8) < density) g.push_back(cell);
    const SurfaceSets s = surfaces(g, b, 3);
    const auto matching = greedy_matching(s, g);
    if (11 * matching.size() < s.exterior.size()) {
      std::cout << "FAIL matching: trial=" << trial << " |M|=" << matching.size()
                << " |exterior|=" << s.exterior.size() << "\n";
      return false;
    }
  }
  std::cout << "PASS matching: " << budget << " random subsets, |M| >= |surface|/11\n";
  return true;
}

bool verify_coupling(long long budget, std::uint64_t seed) {
  const std::vector<std::pair<long long, Position>> grid{
      {8, {2, 0, 0}}, {18, {2, 2, 2}}, {32, {4, 0, 0}}};
  double max_z = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& [t, x] = grid[i];
    const CouplingCheck check = coupling_check(t, x, budget, seed + i, 2);
    max_z = std::max(max_z, std::abs(check.z));
    if (std::abs(check.z) > 3.0) {
      std::cout << "FAIL coupling: t=" << t << " |z|=" << std::abs(check.z) << "\n";
      return false;
    }
  }
  std::cout << "PASS coupling: max |z| = " << fmt(max_z) << " over " << grid.size()
            << " (t,x) pairs, N=" << budget << "\n";
  return true;
}

bool verify_engine_equivalence(long long budget, std::uint64_t seed) {
  for (long long k = 0; k < budget; ++k) {
    SimConfig config;
    config.spec = {3, 6};
    config.m = 48;
    config.seed = seed + static_cast<std::uint64_t>(k);
    const DiffusionTrace fast = run(config, EngineKind::CellList);
    const DiffusionTrace slow = run(config, EngineKind::Naive);
    if (fast.final_time != slow.final_time || fast.events.size() != slow.events.size()) {
      std::cout << "FAIL engine-equivalence: seed=" << config.seed << "\n";
      return false;
    }
    for (std::size_t i = 0; i < fast.events.size(); ++i)
      if (!(fast.events[i] == slow.events[i])) {
        std::cout << "FAIL engine-equivalence: seed=" << config.seed << " event " << i << "\n";
        return false;
      }
  }
  std::cout << "PASS engine-equivalence: " << budget << " seeds, exact trace equality\n";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random-walk information diffusion on bounded grids"};
  app.require_subcommand(1);

  // --- simulate --------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "run one seeded diffusion");
  int sim_d = 1, sim_n = 0, sim_m = 1, sim_meet = 1, sim_stride = 1;
  double sim_gamma = 0;
  std::string sim_rule = "standard", sim_trace_path;
  std::uint64_t sim_seed = 0;
  std::int64_t sim_max_steps = -1;
  bool sim_log_positions = false;
  simulate->add_option("--d", sim_d, "dimension")->required();
  simulate->add_option("--n", sim_n, "grid half-side")->required();
  simulate->add_option("--m", sim_m, "agent count")->required();
  simulate->add_option("--rule", sim_rule, "standard|island")->required();
  simulate->add_option("--seed", sim_seed, "rng seed")->required();
  simulate->add_option("--gamma", sim_gamma, "island radius (island rule only)");
  simulate->add_option("--meeting-distance", sim_meet, "L1 meeting threshold");
  simulate->add_option("--max-steps", sim_max_steps, "step cap (-1 = default)");
  simulate->add_option("--trace", sim_trace_path, "write a JSONL trace here");
  simulate->add_flag("--log-positions", sim_log_positions, "record positions in the trace");
  simulate->add_option("--log-stride", sim_stride, "record every k-th step");

  // --- sweep -----------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "run a trial sweep from a JSON plan");
  std::string sweep_plan_path, sweep_out;
  int sweep_workers = 0;
  bool sweep_resume = false;
  sweep_cmd->add_option("--plan", sweep_plan_path, "plan JSON file")->required();
  sweep_cmd->add_option("--out", sweep_out, "output CSV")->required();
  sweep_cmd->add_option("--workers", sweep_workers, "override plan worker cap");
  sweep_cmd->add_flag("--resume", sweep_resume, "skip (cell, trial) keys already in the output");

  // --- probe -----------------------------------------------------------------
  auto* probe = app.add_subcommand("probe", "random-walk probability probes");
  std::string probe_op, probe_x = "0", probe_a, probe_b, probe_start;
  long long probe_r = 1, probe_t = 1, probe_N = 100000, probe_j = 1, probe_xdist = 8;
  int probe_d = 3, probe_n = 0, probe_workers = 2;
  double probe_eps = 0.0625;
  bool probe_lazy = false, probe_human = false;
  std::uint64_t probe_seed = 0;
  bool probe_seed_set = false;
  probe->add_option("--op", probe_op, "passage|p|q|Q|meet|multi|mixing|boundary")->required();
  probe->add_option("--r", probe_r, "passage distance");
  probe->add_option("--t", probe_t, "time horizon");
  probe->add_option("--x", probe_x, "displacement vector, comma separated (or distance for multi)");
  probe->add_option("--d", probe_d, "dimension");
  probe->add_option("--n", probe_n, "grid half-side (mixing/boundary)");
  probe->add_option("--N", probe_N, "MC trials");
  probe->add_option("--j", probe_j, "source walk count (multi)");
  probe->add_option("--xdist", probe_xdist, "source distance (multi)");
  probe->add_option("--eps", probe_eps, "target statistical distance (mixing)");
  probe->add_option("--a", probe_a, "start A, comma separated (boundary)");
  probe->add_option("--b", probe_b, "start B, comma separated (boundary)");
  probe->add_option("--start", probe_start, "start position (mixing; default origin)");
  probe->add_flag("--lazy", probe_lazy, "lazy kernel (mixing)");
  probe->add_flag("--human", probe_human, "human-readable output");
  probe->add_option("--workers", probe_workers, "MC worker threads");
  auto* seed_opt = probe->add_option("--seed", probe_seed, "rng seed (MC ops)");
  probe->callback([&] { probe_seed_set = seed_opt->count() > 0; });

  // --- analyze ---------------------------------------------------------------
  auto* analyze = app.add_subcommand("analyze", "reports over a recorded trace");
  std::string an_trace, an_what, an_json_out;
  double an_gamma = -1;
  std::int64_t an_window = -1, an_time = 0;
  double an_margin = -1;
  analyze->add_option("--trace", an_trace, "trace JSONL file")->required();
  analyze->add_option("--what", an_what, "tree|islands|growth|goodness")->required();
  analyze->add_option("--gamma", an_gamma, "proximity radius (islands)");
  analyze->add_option("--window", an_window, "tree time window (default: whole trace)");
  analyze->add_option("--t", an_time, "log time to analyze (islands)");
  analyze->add_option("--interior-margin", an_margin, "restrict tree anchors to the interior");
  analyze->add_option("--json", an_json_out, "also write a JSON report here");

  // --- verify ----------------------------------------------------------------
  auto* verify = app.add_subcommand("verify", "property verification suites");
  std::string verify_suite;
  long long verify_budget = -1;
  std::uint64_t verify_seed = 0;
  verify->add_option("--suite", verify_suite, "isoperimetry|matching|coupling|engine-equivalence")
      ->required();
  verify->add_option("--budget", verify_budget, "random-case or MC-trial count");
  verify->add_option("--seed", verify_seed, "rng seed")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      if (sim_rule != "island" && simulate->count("--gamma") > 0)
        throw std::invalid_argument("--gamma requires --rule island");
      SimConfig config;
      config.spec = {sim_d, sim_n};
      config.m = sim_m;
      config.rule = rule_from_name(sim_rule);
      config.gamma = sim_gamma;
      config.meeting_distance = sim_meet;
      config.seed = sim_seed;
      config.max_steps = sim_max_steps;
      config.log_positions = sim_log_positions || !sim_trace_path.empty();
      config.log_stride = sim_stride;
      config.validate();

      const auto start = std::chrono::steady_clock::now();
      const DiffusionTrace trace = run(config);
      const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - start)
                               .count();
      if (trace.timed_out())
        std::cout << "T=TIMEOUT\n";
      else
        std::cout << "T=" << trace.final_time << "\n";
      std::cout << "steps=" << (trace.timed_out() ? config.effective_max_steps() : trace.final_time)
                << "\n";
      std::cout << "events=" << trace.events.size() << "\n";
      std::cout << "wall_ms=" << wall_ms << "\n";
      if (!sim_trace_path.empty()) write_trace_file(trace, sim_trace_path);
      return 0;
    }

    if (sweep_cmd->parsed()) {
      SweepPlan plan = plan_from_file(sweep_plan_path);
      if (sweep_workers > 0) plan.workers = sweep_workers;
      const auto rows = run_sweep_to_file(plan, sweep_out, sweep_resume);
      std::cout << "rows=" << rows.size() << "\n";
      return 0;
    }

    if (probe->parsed()) {
      const bool needs_seed = probe_op == "q" || probe_op == "Q" || probe_op == "meet" ||
                              probe_op == "multi" || probe_op == "boundary";
      if (needs_seed && !probe_seed_set)
        throw std::invalid_argument("probe --op " + probe_op +
                                    " draws random trials and requires an explicit --seed");
      ProbeRow row;
      row.op = probe_op;
      if (probe_op == "passage") {
        row.params = "r=" + std::to_string(probe_r) + ";t=" + std::to_string(probe_t);
        row.estimate = fmt(passage_pmf_1d(probe_r, probe_t));
      } else if (probe_op == "p") {
        const Position x = parse_vector(probe_x, probe_d);
        row.params = "d=" + std::to_string(probe_d) + ";t=" + std::to_string(probe_t) +
                     ";x=" + probe_x;
        row.estimate = fmt(p_unbounded(probe_d, probe_t, x));
        if (probe_t >= 1) row.oracle = fmt(p_gaussian(probe_d, probe_t, x));
      } else if (probe_op == "q") {
        const Position x = parse_vector(probe_x, probe_d);
        row.params = "d=" + std::to_string(probe_d) + ";t=" + std::to_string(probe_t) +
                     ";x=" + probe_x + ";N=" + std::to_string(probe_N);
        const MCEstimate est = q_estimate(probe_d, probe_t, x, probe_N, probe_seed, probe_workers);
        row.estimate = fmt(est.estimate);
        row.ci = fmt(est.half_width());
        if (probe_t <= 10 && probe_d <= 3) {
          const double oracle = q_exact(probe_d, probe_t, x);
          row.oracle = fmt(oracle);
          row.z = fmt((est.estimate - oracle) / std::max(1e-12, est.stderr_()));
        }
      } else if (probe_op == "Q") {
        const Position x = parse_vector(probe_x, 3);
        row.params = "t=" + std::to_string(probe_t) + ";x=" + probe_x +
                     ";N=" + std::to_string(probe_N);
        const CouplingCheck check = coupling_check(probe_t, x, probe_N, probe_seed, probe_workers);
        row.estimate = fmt(check.collision.estimate);
        row.ci = fmt(check.collision.half_width());
        row.oracle = fmt(check.visit.estimate);
        row.z = fmt(check.z);
      } else if (probe_op == "meet") {
        const Position x = parse_vector(probe_x, 3);
        row.params = "t=" + std::to_string(probe_t) + ";x=" + probe_x +
                     ";N=" + std::to_string(probe_N);
        const MCEstimate est = meet_estimate(probe_t, x, probe_N, probe_seed, probe_workers);
        row.estimate = fmt(est.estimate);
        row.ci = fmt(est.half_width());
        if (probe_t <= 20) {
          const double oracle = meet_exact_pairdiff(probe_t, x);
          row.oracle = fmt(oracle);
          row.z = fmt((est.estimate - oracle) / std::max(1e-12, est.stderr_()));
        }
      } else if (probe_op == "multi") {
        row.params = "j=" + std::to_string(probe_j) + ";x=" + std::to_string(probe_xdist) +
                     ";N=" + std::to_string(probe_N);
        const MCEstimate est =
            multi_catch_estimate(static_cast<int>(probe_j), probe_xdist, probe_N, probe_seed,
                                 probe_workers);
        row.estimate = fmt(est.estimate);
        row.ci = fmt(est.half_width());
      } else if (probe_op == "mixing") {
        const GridSpec spec{probe_d, probe_n};
        Position start(probe_d, 0);
        if (!probe_start.empty()) start = parse_vector(probe_start, probe_d);
        row.params = "d=" + std::to_string(probe_d) + ";n=" + std::to_string(probe_n) +
                     ";eps=" + fmt(probe_eps) + (probe_lazy ? ";lazy=1" : ";lazy=0");
        const MixingProfile prof = mixing_profile(spec, start, probe_eps, probe_lazy);
        row.estimate = std::to_string(prof.t);
        row.oracle = fmt(prof.distance);
      } else if (probe_op == "boundary") {
        const GridSpec spec{probe_d, probe_n};
        const Position a = parse_vector(probe_a, probe_d);
        const Position b = parse_vector(probe_b, probe_d);
        row.params = "n=" + std::to_string(probe_n) + ";a=" + probe_a + ";b=" + probe_b +
                     ";N=" + std::to_string(probe_N);
        const MCEstimate est = boundary_meet_estimate(spec, a, b, probe_N, probe_seed, probe_workers);
        row.estimate = fmt(est.estimate);
        row.ci = fmt(est.half_width());
      } else {
        throw std::invalid_argument("unknown probe op: " + probe_op);
      }
      print_probe(row, probe_human);
      return 0;
    }

    if (analyze->parsed()) {
      const DiffusionTrace trace = read_trace_file(an_trace);
      if (an_what == "tree") {
        std::int64_t window = an_window;
        if (window < 0) {
          window = trace.final_time >= 0 ? trace.final_time : 0;
          for (const Event& e : trace.events) window = std::max(window, e.t);
        }
        RegionPredicate region;
        if (an_margin >= 0) {
          const GridSpec spec = trace.config.spec;
          const double margin = an_margin;
          region = [spec, margin](std::span<const Coord> pos) {
            return in_interior(spec, pos, margin);
          };
        }
        const DiffusionTree tree = build_diffusion_tree(trace, region, window);
        std::cout << tree_to_text(tree) << "\n";
        std::cout << "height=" << tree_height(tree) << "\n";
        if (!an_json_out.empty()) {
          std::ofstream out(an_json_out);
          out << tree_to_json(tree).dump(2) << "\n";
        }
      } else if (an_what == "islands") {
        if (an_gamma < 0) throw std::invalid_argument("--what islands requires --gamma");
        const auto pos = trace.positions_at(an_time);
        if (!pos)
          throw std::invalid_argument("trace has no recorded positions at t=" +
                                      std::to_string(an_time));
        const IslandPartition part =
            islands(*pos, trace.config.m, trace.config.spec, an_gamma);
        std::cout << "components=" << part.components.size() << "\n";
        for (std::size_t c = 0; c < part.components.size(); ++c) {
          std::cout << "component " << c << ":";
          for (int agent : part.components[c]) std::cout << ' ' << agent;
          std::cout << "\n";
        }
      } else if (an_what == "growth") {
        if (trace.config.spec.d != 3)
          throw std::invalid_argument("--what growth requires a d=3 trace");
        if (trace.log_times.empty())
          throw std::invalid_argument("--what growth requires recorded positions");
        const int ell2hat = default_ell2hat(trace.config.spec, trace.config.m);
        std::vector<std::uint8_t> infected(static_cast<std::size_t>(trace.config.m), 0);
        infected[0] = 1;
        std::size_t event_idx = 0;
        for (std::size_t s = 0; s < trace.log_times.size(); ++s) {
          while (event_idx < trace.events.size() && trace.events[event_idx].t <= trace.log_times[s]) {
            infected[static_cast<std::size_t>(trace.events[event_idx].infectee)] = 1;
            ++event_idx;
          }
          const SubcubeView view = subcube_view(trace.log_positions[s], infected, trace.config.m,
                                                trace.config.spec, ell2hat);
          nlohmann::ordered_json j;
          j["t"] = trace.log_times[s];
          j["a_f"] = view.a_fG + view.a_fB;
          j["a_u"] = view.a_uG + view.a_uB;
          j["good_cubes"] = view.good_cubes.size();
          j["surface"] = surfaces(view.good_cubes, view.b, 3).exterior.size();
          j["p_type"] = view.p_type;
          std::cout << j.dump() << "\n";
        }
      } else if (an_what == "goodness") {
        if (trace.config.spec.d != 3)
          throw std::invalid_argument("--what goodness requires a d=3 trace");
        if (trace.log_times.empty())
          throw std::invalid_argument("--what goodness requires recorded positions");
        GoodBehaviorParams params;
        params.spec = trace.config.spec;
        params.m = trace.config.m;
        const auto report =
            check_good_behavior(trace.log_times, trace.log_positions, params, {}, trace.log_times);
        std::cout << "ell1=" << fmt(report.ell1) << " ell2=" << fmt(report.ell2)
                  << " shells=" << report.shell_count
                  << " density_vacuous=" << (report.density_vacuous ? 1 : 0) << "\n";
        for (const auto& cp : report.checkpoints)
          std::cout << "t=" << cp.t << " D=" << cp.density << " E=" << cp.small_islands
                    << " L=" << cp.short_travel << " G=" << cp.good() << "\n";
      } else {
        throw std::invalid_argument("unknown --what: " + an_what);
      }
      return 0;
    }

    if (verify->parsed()) {
      bool ok = false;
      if (verify_suite == "isoperimetry")
        ok = verify_isoperimetry(verify_budget > 0 ? verify_budget : 10000, verify_seed);
      else if (verify_suite == "matching")
        ok = verify_matching(verify_budget > 0 ? verify_budget : 500, verify_seed);
      else if (verify_suite == "coupling")
        ok = verify_coupling(verify_budget > 0 ? verify_budget : 100000, verify_seed);
      else if (verify_suite == "engine-equivalence")
        ok = verify_engine_equivalence(verify_budget > 0 ? verify_budget : 100, verify_seed);
      else
        throw std::invalid_argument("unknown suite: " + verify_suite);
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

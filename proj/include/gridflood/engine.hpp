#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "islands.hpp"
#include "rng.hpp"

namespace gridflood {

enum class Rule { Standard, Island };

enum class EngineKind { CellList, Naive };

struct SimConfig {
  GridSpec spec;
  int m = 1;
  Rule rule = Rule::Standard;
  double gamma = 0.0;        // island radius (L1), required >= 1 under the island rule
  int meeting_distance = 1;  // L1 threshold; <= 1 includes co-location
  std::uint64_t seed = 0;
  std::int64_t max_steps = -1;  // -1 -> default_max_steps()
  bool log_positions = false;
  int log_stride = 1;

  // Generous cap: exceeds both regimes' predicted diffusion times with
  // polylog headroom. 64 * n^2 * max(1, n^d / m).
  std::int64_t default_max_steps() const {
    long long nd = 1;
    for (int i = 0; i < spec.d; ++i) {
      nd *= std::max(1, spec.n);
      if (nd > (1LL << 50)) break;
    }
    const long long ratio = std::max<long long>(1, nd / std::max(1, m));
    return 64 * std::max<long long>(1, 1LL * spec.n * spec.n) * ratio;
  }

  std::int64_t effective_max_steps() const {
    return max_steps >= 0 ? max_steps : default_max_steps();
  }

  void validate() const {
    spec.validate();
    if (m < 1) throw std::invalid_argument("SimConfig: m must be >= 1");
    if (meeting_distance < 0)
      throw std::invalid_argument("SimConfig: meeting_distance must be >= 0");
    if (rule == Rule::Island && gamma < 1)
      throw std::invalid_argument("SimConfig: gamma must be >= 1 under the island rule");
    if (log_stride < 1) throw std::invalid_argument("SimConfig: log_stride must be >= 1");
  }
};

enum class CauseKind : std::uint8_t { Direct, IslandClosure };

// One infection event. For Direct, cause_agent is the meeting infector (the
// smallest-index one when several qualify). For IslandClosure, cause_agent is
// the directly-infected agent whose island was closed over (again the
// smallest-index one in that island); at t=0 that is agent 0.
struct Event {
  std::int64_t t = 0;
  std::int32_t infectee = 0;
  CauseKind cause = CauseKind::Direct;
  std::int32_t cause_agent = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

struct SimState {
  std::int64_t t = 0;
  int m = 0;
  int d = 0;
  std::vector<Coord> pos;                     // flattened, m * d
  std::vector<std::uint8_t> infected;         // monotone in t
  std::vector<std::int64_t> infection_time;   // -1 while uninfected
  int infected_count = 0;

  std::span<const Coord> position(int i) const {
    return std::span<const Coord>(pos).subspan(static_cast<std::size_t>(i) * d,
                                               static_cast<std::size_t>(d));
  }
  std::span<Coord> position(int i) {
    return std::span<Coord>(pos).subspan(static_cast<std::size_t>(i) * d,
                                         static_cast<std::size_t>(d));
  }

  bool all_infected() const { return infected_count == m; }
};

struct DiffusionTrace {
  SimConfig config;
  std::vector<Event> events;                  // sorted by (t, infectee)
  std::int64_t final_time = -1;               // -1 means the step cap was hit
  bool timed_out() const { return final_time < 0; }

  std::vector<std::int64_t> log_times;        // recorded steps (when enabled)
  std::vector<std::vector<Coord>> log_positions;

  std::optional<std::vector<Coord>> positions_at(std::int64_t t) const {
    for (std::size_t i = 0; i < log_times.size(); ++i)
      if (log_times[i] == t) return log_positions[i];
    return std::nullopt;
  }
};

inline const char* rule_name(Rule r) { return r == Rule::Standard ? "standard" : "island"; }

inline Rule rule_from_name(const std::string& s) {
  if (s == "standard") return Rule::Standard;
  if (s == "island") return Rule::Island;
  throw std::invalid_argument("unknown rule: " + s + " (expected standard|island)");
}

// m positions i.i.d. uniform on the grid; agent 0 infected at time 0.
inline SimState init_uniform(const SimConfig& config) {
  config.validate();
  SimState st;
  st.m = config.m;
  st.d = config.spec.d;
  st.pos.resize(static_cast<std::size_t>(config.m) * config.spec.d);
  st.infected.assign(static_cast<std::size_t>(config.m), 0);
  st.infection_time.assign(static_cast<std::size_t>(config.m), -1);
  const auto side = static_cast<std::uint32_t>(config.spec.side());
  for (int i = 0; i < config.m; ++i) {
    RngStream rng = RngStream::derive(config.seed, {kInitTag, static_cast<std::uint64_t>(i)});
    for (int a = 0; a < config.spec.d; ++a)
      st.pos[static_cast<std::size_t>(i) * config.spec.d + a] =
          static_cast<Coord>(rng.next_below(side)) - config.spec.n;
  }
  st.infected[0] = 1;
  st.infection_time[0] = 0;
  st.infected_count = 1;
  return st;
}

inline std::vector<RngStream> walk_streams(const SimConfig& config) {
  std::vector<RngStream> walks;
  walks.reserve(static_cast<std::size_t>(config.m));
  for (int i = 0; i < config.m; ++i)
    walks.push_back(RngStream::derive(config.seed, {kWalkTag, static_cast<std::uint64_t>(i)}));
  return walks;
}

namespace detail {

inline void move_all(SimState& st, const GridSpec& spec, std::vector<RngStream>& walks) {
  const auto moves = static_cast<std::uint32_t>(2 * spec.d);
  for (int i = 0; i < st.m; ++i)
    step_directed(spec, st.position(i), static_cast<int>(walks[static_cast<std::size_t>(i)].next_below(moves)));
}

// Finds, for every uninfected agent, the smallest-index infected agent within
// the meeting distance. Infection flags are read before any commit, so there
// is no intra-step cascade.
inline std::vector<std::pair<int, int>> find_meetings(const SimState& st, const SimConfig& config,
                                                      EngineKind kind) {
  std::vector<std::pair<int, int>> hits;  // (infectee, infector)
  const int d = st.d;
  const int meet = config.meeting_distance;
  if (kind == EngineKind::Naive) {
    for (int j = 0; j < st.m; ++j) {
      if (st.infected[j]) continue;
      int best = -1;
      for (int i = 0; i < st.m; ++i) {
        if (!st.infected[i]) continue;
        if (l1_distance(st.position(i), st.position(j)) <= meet) {
          best = i;
          break;  // ascending scan: first hit is the smallest index
        }
      }
      if (best >= 0) hits.emplace_back(j, best);
    }
    return hits;
  }

  // Cell list over infected agents only; query each uninfected agent.
  std::vector<Coord> infected_pos;
  std::vector<int> infected_ids;
  infected_pos.reserve(static_cast<std::size_t>(st.infected_count) * d);
  infected_ids.reserve(static_cast<std::size_t>(st.infected_count));
  for (int i = 0; i < st.m; ++i) {
    if (!st.infected[i]) continue;
    const auto p = st.position(i);
    infected_pos.insert(infected_pos.end(), p.begin(), p.end());
    infected_ids.push_back(i);
  }
  CellList cells(infected_pos, static_cast<int>(infected_ids.size()), d, config.spec,
                 std::max(meet, 1));
  for (int j = 0; j < st.m; ++j) {
    if (st.infected[j]) continue;
    const auto pj = st.position(j);
    int best = -1;
    cells.for_neighborhood(pj, config.spec, [&](int slot) {
      const int i = infected_ids[static_cast<std::size_t>(slot)];
      if (best >= 0 && i >= best) return;
      const auto pi = std::span<const Coord>(infected_pos)
                          .subspan(static_cast<std::size_t>(slot) * d, static_cast<std::size_t>(d));
      if (l1_distance(pi, pj) <= meet) best = i;
    });
    if (best >= 0) hits.emplace_back(j, best);
  }
  std::sort(hits.begin(), hits.end());
  return hits;
}

// One closure pass: every uninfected agent sharing an island with a directly
// infected agent becomes infected. direct_now must be sorted ascending;
// closure infectees do not seed further closure within the same step.
inline void apply_island_closure(SimState& st, const SimConfig& config, EngineKind kind,
                                 std::span<const int> direct_now, std::int64_t t,
                                 std::vector<Event>& out) {
  if (direct_now.empty()) return;
  const IslandPartition part =
      kind == EngineKind::Naive ? islands_naive(st.pos, st.m, config.spec, config.gamma)
                                : islands(st.pos, st.m, config.spec, config.gamma);
  std::vector<int> seed_of_component(part.components.size(), -1);
  for (int s : direct_now) {
    int& slot = seed_of_component[static_cast<std::size_t>(part.label[static_cast<std::size_t>(s)])];
    if (slot < 0) slot = s;  // ascending input keeps the smallest seed
  }
  for (std::size_t c = 0; c < part.components.size(); ++c) {
    if (seed_of_component[c] < 0) continue;
    for (int member : part.components[c]) {
      if (st.infected[static_cast<std::size_t>(member)]) continue;
      st.infected[static_cast<std::size_t>(member)] = 1;
      st.infection_time[static_cast<std::size_t>(member)] = t;
      ++st.infected_count;
      out.push_back({t, member, CauseKind::IslandClosure, seed_of_component[c]});
    }
  }
}

inline void commit_meetings(SimState& st, const std::vector<std::pair<int, int>>& hits,
                            std::int64_t t, std::vector<Event>& out) {
  for (const auto& [j, i] : hits) {
    st.infected[static_cast<std::size_t>(j)] = 1;
    st.infection_time[static_cast<std::size_t>(j)] = t;
    ++st.infected_count;
    out.push_back({t, j, CauseKind::Direct, i});
  }
}

inline void record_positions(DiffusionTrace& trace, const SimState& st) {
  trace.log_times.push_back(st.t);
  trace.log_positions.push_back(st.pos);
}

}  // namespace detail

// Advances one step under Definition-1 semantics: simultaneous moves, then
// infections evaluated against the pre-step infection flags.
inline std::vector<Event> step_standard(SimState& st, const SimConfig& config,
                                        std::vector<RngStream>& walks,
                                        EngineKind kind = EngineKind::CellList) {
  detail::move_all(st, config.spec, walks);
  ++st.t;
  std::vector<Event> events;
  const auto hits = detail::find_meetings(st, config, kind);
  detail::commit_meetings(st, hits, st.t, events);
  return events;
}

// Island rule: direct infections exactly as step_standard, then one island
// closure pass over the components of the gamma-proximity graph.
inline std::vector<Event> step_island(SimState& st, const SimConfig& config,
                                      std::vector<RngStream>& walks,
                                      EngineKind kind = EngineKind::CellList) {
  detail::move_all(st, config.spec, walks);
  ++st.t;
  std::vector<Event> events;
  const auto hits = detail::find_meetings(st, config, kind);
  detail::commit_meetings(st, hits, st.t, events);
  std::vector<int> direct_now;
  direct_now.reserve(hits.size());
  for (const auto& [j, i] : hits) direct_now.push_back(j);
  detail::apply_island_closure(st, config, kind, direct_now, st.t, events);
  return events;
}

// Full run from explicit initial positions and per-agent walk streams.
// Relabeling agents together with their streams leaves T unchanged.
inline DiffusionTrace run_explicit(const SimConfig& config, SimState st,
                                   std::vector<RngStream> walks,
                                   EngineKind kind = EngineKind::CellList) {
  config.validate();
  DiffusionTrace trace;
  trace.config = config;

  // t = 0: under the island rule the initial island of agent 0 is infected;
  // under the standard rule nobody else is, even if adjacent.
  if (config.rule == Rule::Island) {
    const int origin = 0;
    detail::apply_island_closure(st, config, kind, std::span<const int>(&origin, 1), 0,
                                 trace.events);
  }
  if (config.log_positions) detail::record_positions(trace, st);
  if (st.all_infected()) {
    trace.final_time = 0;
    return trace;
  }

  const std::int64_t cap = config.effective_max_steps();
  while (st.t < cap) {
    auto events = config.rule == Rule::Island ? step_island(st, config, walks, kind)
                                              : step_standard(st, config, walks, kind);
    trace.events.insert(trace.events.end(), events.begin(), events.end());
    if (config.log_positions && st.t % config.log_stride == 0)
      detail::record_positions(trace, st);
    if (st.all_infected()) {
      trace.final_time = st.t;
      return trace;
    }
  }
  return trace;  // step cap hit: final_time stays -1 (Timeout is a value)
}

inline DiffusionTrace run(const SimConfig& config, EngineKind kind = EngineKind::CellList) {
  return run_explicit(config, init_uniform(config), walk_streams(config), kind);
}

// Runs the standard and island rules coupled on the same walks (one shared
// draw per agent per step), returning both traces. The island-rule infected
// set is a superset of the standard-rule set at every step; the returned
// per-step counts let callers assert exactly that.
struct CoupledRun {
  DiffusionTrace standard_trace;
  DiffusionTrace island_trace;
  bool island_dominates = true;  // island infected set contains standard's at every step
};

inline CoupledRun run_coupled(const SimConfig& base, EngineKind kind = EngineKind::CellList) {
  SimConfig std_cfg = base;
  std_cfg.rule = Rule::Standard;
  SimConfig isl_cfg = base;
  isl_cfg.rule = Rule::Island;
  std_cfg.validate();
  isl_cfg.validate();

  SimState ss = init_uniform(std_cfg);
  SimState is = ss;
  auto walks = walk_streams(base);

  CoupledRun out;
  out.standard_trace.config = std_cfg;
  out.island_trace.config = isl_cfg;

  const int origin = 0;
  detail::apply_island_closure(is, isl_cfg, kind, std::span<const int>(&origin, 1), 0,
                               out.island_trace.events);
  if (is.all_infected()) out.island_trace.final_time = 0;
  if (ss.all_infected()) out.standard_trace.final_time = 0;

  const std::int64_t cap = std_cfg.effective_max_steps();
  const auto moves = static_cast<std::uint32_t>(2 * base.spec.d);
  std::vector<int> dirs(static_cast<std::size_t>(base.m));
  while ((ss.t < cap && !ss.all_infected()) || (is.t < cap && !is.all_infected())) {
    for (int i = 0; i < base.m; ++i)
      dirs[static_cast<std::size_t>(i)] = static_cast<int>(walks[static_cast<std::size_t>(i)].next_below(moves));
    for (SimState* st : {&ss, &is})
      for (int i = 0; i < base.m; ++i)
        step_directed(base.spec, st->position(i), dirs[static_cast<std::size_t>(i)]);
    ++ss.t;
    ++is.t;

    if (!ss.all_infected()) {
      const auto hits = detail::find_meetings(ss, std_cfg, kind);
      detail::commit_meetings(ss, hits, ss.t, out.standard_trace.events);
      if (ss.all_infected()) out.standard_trace.final_time = ss.t;
    }
    if (!is.all_infected()) {
      const auto hits = detail::find_meetings(is, isl_cfg, kind);
      detail::commit_meetings(is, hits, is.t, out.island_trace.events);
      std::vector<int> direct_now;
      for (const auto& [j, i] : hits) direct_now.push_back(j);
      detail::apply_island_closure(is, isl_cfg, kind, direct_now, is.t, out.island_trace.events);
      if (is.all_infected()) out.island_trace.final_time = is.t;
    }
    for (int i = 0; i < base.m; ++i)
      if (ss.infected[static_cast<std::size_t>(i)] && !is.infected[static_cast<std::size_t>(i)])
        out.island_dominates = false;
    if (ss.t >= cap) break;
  }
  return out;
}

// Replays an externally scripted sequence of position frames through the
// infection logic. Frames are (time, flattened positions); infection state is
// updated at each frame time in order, and nothing happens between frames.
struct ScriptFrame {
  std::int64_t t = 0;
  std::vector<Coord> pos;
};

inline DiffusionTrace run_scripted(const SimConfig& config, const std::vector<ScriptFrame>& frames,
                                   EngineKind kind = EngineKind::CellList) {
  config.validate();
  if (frames.empty() || frames.front().t != 0)
    throw std::invalid_argument("run_scripted: frames must start at t = 0");
  SimState st;
  st.m = config.m;
  st.d = config.spec.d;
  st.infected.assign(static_cast<std::size_t>(config.m), 0);
  st.infection_time.assign(static_cast<std::size_t>(config.m), -1);
  st.infected[0] = 1;
  st.infection_time[0] = 0;
  st.infected_count = 1;

  DiffusionTrace trace;
  trace.config = config;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].pos.size() != static_cast<std::size_t>(config.m) * config.spec.d)
      throw std::invalid_argument("run_scripted: frame has wrong position count");
    st.pos = frames[f].pos;
    st.t = frames[f].t;
    if (f == 0) {
      if (config.rule == Rule::Island) {
        const int origin = 0;
        detail::apply_island_closure(st, config, kind, std::span<const int>(&origin, 1), 0,
                                     trace.events);
      }
    } else {
      const auto hits = detail::find_meetings(st, config, kind);
      detail::commit_meetings(st, hits, st.t, trace.events);
      if (config.rule == Rule::Island) {
        std::vector<int> direct_now;
        for (const auto& [j, i] : hits) direct_now.push_back(j);
        detail::apply_island_closure(st, config, kind, direct_now, st.t, trace.events);
      }
    }
    trace.log_times.push_back(st.t);
    trace.log_positions.push_back(st.pos);
    if (st.all_infected() && trace.final_time < 0) trace.final_time = st.t;
  }
  return trace;
}

}  // namespace gridflood

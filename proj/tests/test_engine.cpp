#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>

#include "gridflood/engine.hpp"
#include "scripted_scenarios.hpp"

using namespace gridflood;

namespace {

// Straight-line reference stepper sharing only the RNG with the engine:
// move everyone, then infect any uninfected agent within the meeting
// distance of an agent that was infected before the move.
struct ReferenceSim {
  SimConfig config;
  std::vector<Position> pos;
  std::vector<bool> infected;
  std::vector<RngStream> walks;
  std::int64_t t = 0;

  explicit ReferenceSim(const SimConfig& c) : config(c) {
    const SimState st = init_uniform(c);
    for (int i = 0; i < c.m; ++i) {
      pos.emplace_back(st.position(i).begin(), st.position(i).end());
      infected.push_back(st.infected[static_cast<std::size_t>(i)] != 0);
    }
    walks = walk_streams(c);
  }

  void step() {
    for (int i = 0; i < config.m; ++i)
      step_in_place(config.spec, pos[static_cast<std::size_t>(i)],
                    walks[static_cast<std::size_t>(i)]);
    ++t;
    const std::vector<bool> before = infected;
    for (int j = 0; j < config.m; ++j) {
      if (before[static_cast<std::size_t>(j)]) continue;
      for (int i = 0; i < config.m; ++i)
        if (before[static_cast<std::size_t>(i)] &&
            l1_distance(pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)]) <=
                config.meeting_distance) {
          infected[static_cast<std::size_t>(j)] = true;
          break;
        }
    }
  }
};

}  // namespace

TEST_CASE("init_uniform: single agent, determinism, uniformity") {
  SimConfig config;
  config.spec = {3, 10};
  config.m = 1;
  config.seed = 5;
  const SimState one = init_uniform(config);
  CHECK(one.infected_count == 1);
  CHECK(one.infection_time[0] == 0);
  CHECK(run(config).final_time == 0);

  config.m = 10000;
  const SimState a = init_uniform(config);
  const SimState b = init_uniform(config);
  CHECK(a.pos == b.pos);

  // per-coordinate mean within 3 sigma of 0
  for (int axis = 0; axis < 3; ++axis) {
    double sum = 0;
    for (int i = 0; i < config.m; ++i) sum += a.pos[static_cast<std::size_t>(i) * 3 + axis];
    const double mean = sum / config.m;
    const double sigma_mean = std::sqrt((21.0 * 21.0 - 1.0) / 12.0 / config.m);
    CHECK(std::abs(mean) <= 3 * sigma_mean);
  }

  // octant occupancy (agents with all coordinates nonzero): p = (10/21)^3
  std::map<int, int> octants;
  for (int i = 0; i < config.m; ++i) {
    int key = 0;
    bool all_nonzero = true;
    for (int axis = 0; axis < 3; ++axis) {
      const Coord c = a.pos[static_cast<std::size_t>(i) * 3 + axis];
      if (c == 0) all_nonzero = false;
      key = key * 2 + (c > 0 ? 1 : 0);
    }
    if (all_nonzero) ++octants[key];
  }
  const double p = std::pow(10.0 / 21.0, 3.0);
  const double sigma = std::sqrt(config.m * p * (1 - p));
  REQUIRE(octants.size() == 8);
  for (const auto& [key, count] : octants) CHECK(std::abs(count - config.m * p) <= 3 * sigma);
}

TEST_CASE("single-node grid floods in one step") {
  SimConfig config;
  config.spec = {1, 0};
  config.m = 5;
  config.seed = 3;
  const DiffusionTrace trace = run(config);
  CHECK(trace.final_time == 1);
  CHECK(trace.events.size() == 4);
  for (const Event& e : trace.events) CHECK(e.t == 1);
}

TEST_CASE("no intra-step cascade under the standard rule") {
  const auto [config, frames] = testing::chain_scenario();
  const DiffusionTrace trace = run_scripted(config, frames);
  REQUIRE(trace.events.size() == 2);
  CHECK(trace.events[0] == Event{1, 1, CauseKind::Direct, 0});
  CHECK(trace.events[1] == Event{2, 2, CauseKind::Direct, 1});
  CHECK(trace.final_time == 2);
}

TEST_CASE("standard rule ignores adjacency at t = 0") {
  SimConfig config;
  config.spec = {1, 8};
  config.m = 2;
  config.rule = Rule::Standard;
  std::vector<ScriptFrame> frames{{0, {0, 1}}};
  const DiffusionTrace trace = run_scripted(config, frames);
  CHECK(trace.events.empty());
  CHECK(trace.final_time == -1);  // script ends before anyone meets
}

TEST_CASE("island rule closes over the initial island at t = 0") {
  SimConfig config;
  config.spec = {1, 0};
  config.m = 5;
  config.rule = Rule::Island;
  config.gamma = 1;
  config.seed = 9;
  const DiffusionTrace trace = run(config);
  CHECK(trace.final_time == 0);
  CHECK(trace.events.size() == 4);
  for (const Event& e : trace.events) {
    CHECK(e.t == 0);
    CHECK(e.cause == CauseKind::IslandClosure);
    CHECK(e.cause_agent == 0);
  }
}

TEST_CASE("island closure does not jump between islands") {
  SimConfig config;
  config.spec = {1, 8};
  config.m = 3;
  config.rule = Rule::Island;
  config.gamma = 1;
  std::vector<ScriptFrame> frames{{0, {0, 2, 5}}, {1, {0, 1, 5}}};
  const DiffusionTrace trace = run_scripted(config, frames);
  REQUIRE(trace.events.size() == 1);
  CHECK(trace.events[0] == Event{1, 1, CauseKind::Direct, 0});
  CHECK(trace.final_time == -1);  // agent 2 is in a separate island
}

TEST_CASE("a large gamma floods the whole population at t = 0") {
  SimConfig config;
  config.spec = {1, 8};
  config.m = 4;
  config.rule = Rule::Island;
  config.gamma = 100;
  std::vector<ScriptFrame> frames{{0, {-8, -6, 3, 8}}, {1, {-8, -7, 3, 8}}};
  const DiffusionTrace trace = run_scripted(config, frames);
  CHECK(trace.final_time == 0);  // gamma covers the grid, initial island is everyone
}

TEST_CASE("engine matches the straight-line reference on seeded runs") {
  SimConfig config;
  config.spec = {1, 2};
  config.m = 3;
  config.seed = 12345;
  ReferenceSim ref(config);

  SimState st = init_uniform(config);
  auto walks = walk_streams(config);
  for (int i = 0; i < config.m; ++i)
    REQUIRE(std::equal(st.position(i).begin(), st.position(i).end(),
                       ref.pos[static_cast<std::size_t>(i)].begin()));
  for (int s = 0; s < 5; ++s) {
    step_standard(st, config, walks);
    ref.step();
    for (int i = 0; i < config.m; ++i) {
      CHECK(std::equal(st.position(i).begin(), st.position(i).end(),
                       ref.pos[static_cast<std::size_t>(i)].begin()));
      CHECK((st.infected[static_cast<std::size_t>(i)] != 0) ==
            ref.infected[static_cast<std::size_t>(i)]);
    }
  }
}

TEST_CASE("cell-list and naive engines produce identical traces") {
  int checked = 0;
  for (int d = 1; d <= 3; ++d)
    for (const Rule rule : {Rule::Standard, Rule::Island})
      for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        SimConfig config;
        config.spec = {d, 6};
        config.m = 24;
        config.rule = rule;
        config.gamma = 2;
        config.seed = seed * 977;
        config.max_steps = 4000;
        const DiffusionTrace fast = run(config, EngineKind::CellList);
        const DiffusionTrace slow = run(config, EngineKind::Naive);
        REQUIRE(fast.final_time == slow.final_time);
        REQUIRE(fast.events.size() == slow.events.size());
        for (std::size_t i = 0; i < fast.events.size(); ++i)
          REQUIRE(fast.events[i] == slow.events[i]);
        ++checked;
      }
  CHECK(checked == 48);
}

TEST_CASE("infection is monotone, agents conserved, positions in bounds") {
  SimConfig config;
  config.spec = {2, 6};
  config.m = 20;
  config.rule = Rule::Island;
  config.gamma = 2;
  config.seed = 777;

  SimState st = init_uniform(config);
  auto walks = walk_streams(config);
  int last_count = st.infected_count;
  std::vector<std::uint8_t> last_flags = st.infected;
  for (int s = 0; s < 200 && !st.all_infected(); ++s) {
    step_island(st, config, walks);
    REQUIRE(st.infected_count >= last_count);
    for (int i = 0; i < config.m; ++i) {
      REQUIRE(st.infected[static_cast<std::size_t>(i)] >= last_flags[static_cast<std::size_t>(i)]);
      REQUIRE(config.spec.in_bounds(st.position(i)));
    }
    last_count = st.infected_count;
    last_flags = st.infected;
    REQUIRE(static_cast<int>(st.infected.size()) == config.m);
  }
}

TEST_CASE("island rule dominates the coupled standard rule") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SimConfig config;
    config.spec = {2, 8};
    config.m = 32;
    config.gamma = 2;
    config.seed = seed * 31337;
    const CoupledRun coupled = run_coupled(config);
    CHECK(coupled.island_dominates);
    REQUIRE(coupled.standard_trace.final_time > 0);
    REQUIRE(coupled.island_trace.final_time >= 0);
    CHECK(coupled.island_trace.final_time <= coupled.standard_trace.final_time);
  }
}

TEST_CASE("relabeling agents together with their streams preserves T") {
  SimConfig config;
  config.spec = {2, 5};
  config.m = 6;
  config.seed = 2024;
  const DiffusionTrace base = run(config);

  // permutation of agents 1..5 (agent 0 stays the origin)
  const std::vector<int> perm{0, 3, 1, 5, 2, 4};
  SimState st = init_uniform(config);
  SimState permuted = st;
  auto walks = walk_streams(config);
  std::vector<RngStream> permuted_walks(walks.size());
  for (int i = 0; i < config.m; ++i) {
    const int target = perm[static_cast<std::size_t>(i)];
    std::copy(st.position(i).begin(), st.position(i).end(), permuted.position(target).begin());
    permuted_walks[static_cast<std::size_t>(target)] = walks[static_cast<std::size_t>(i)];
  }
  const DiffusionTrace relabeled = run_explicit(config, permuted, permuted_walks);
  CHECK(relabeled.final_time == base.final_time);

  // same infection-times multiset under the relabeling
  std::multiset<std::int64_t> a, b;
  for (const Event& e : base.events) a.insert(e.t);
  for (const Event& e : relabeled.events) b.insert(e.t);
  CHECK(a == b);
}

TEST_CASE("step cap yields a timeout value, not an error") {
  SimConfig config;
  config.spec = {3, 10};
  config.m = 2;
  config.seed = 5;
  config.max_steps = 0;
  const DiffusionTrace trace = run(config);
  CHECK(trace.timed_out());
  CHECK(trace.final_time == -1);
}

TEST_CASE("config validation rejects bad combinations") {
  SimConfig config;
  config.spec = {3, 4};
  config.m = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.m = 2;
  config.rule = Rule::Island;
  config.gamma = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.gamma = 1;
  CHECK_NOTHROW(config.validate());
  config.meeting_distance = -1;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("trace invariants hold on generated runs") {
  for (const Rule rule : {Rule::Standard, Rule::Island})
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      SimConfig config;
      config.spec = {2, 6};
      config.m = 24;
      config.rule = rule;
      config.gamma = 2;
      config.seed = 4000 + seed;
      const DiffusionTrace trace = run(config);
      REQUIRE(trace.final_time >= 0);

      std::map<int, std::int64_t> infection_time{{0, 0}};
      std::int64_t last_t = 0;
      for (const Event& e : trace.events) {
        REQUIRE(e.t >= last_t);  // sorted by time
        last_t = e.t;
        REQUIRE(infection_time.count(e.infectee) == 0);  // at most once per agent
        infection_time[e.infectee] = e.t;
        if (e.cause == CauseKind::Direct) {
          // the infector was infected strictly before t
          REQUIRE(infection_time.count(e.cause_agent) == 1);
          REQUIRE(infection_time.at(e.cause_agent) < e.t);
        } else {
          // the closure seed is infected at the same step (or is the origin)
          REQUIRE(infection_time.count(e.cause_agent) == 1);
          REQUIRE(infection_time.at(e.cause_agent) <= e.t);
        }
      }
      REQUIRE(static_cast<int>(infection_time.size()) == config.m);
    }
}

TEST_CASE("mean T across seeds matches the naive reference engine") {
  // identical seeds give identical T, so the means agree exactly
  double fast_sum = 0, slow_sum = 0;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    SimConfig config;
    config.spec = {2, 8};
    config.m = 64;
    config.seed = 1000 + seed;
    fast_sum += static_cast<double>(run(config, EngineKind::CellList).final_time);
    slow_sum += static_cast<double>(run(config, EngineKind::Naive).final_time);
  }
  CHECK(fast_sum == slow_sum);
  CHECK(std::abs(fast_sum / slow_sum - 1.0) <= 0.3);
}

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <map>
#include <set>

#include "gridflood/islands.hpp"
#include "gridflood/tree.hpp"
#include "scripted_scenarios.hpp"

using namespace gridflood;

TEST_CASE("islands: basic components") {
  const GridSpec spec{3, 8};
  const std::vector<Coord> flat{0, 0, 0, 1, 0, 0, 5, 5, 5};
  const IslandPartition part = islands(flat, 3, spec, 1);
  CHECK(part.label[0] == part.label[1]);
  CHECK(part.label[0] != part.label[2]);
  CHECK(part.size_of(0) == 2);
  CHECK(part.size_of(2) == 1);
}

TEST_CASE("islands: co-located agents form one component") {
  const GridSpec spec{2, 4};
  std::vector<Coord> flat;
  for (int i = 0; i < 7; ++i) {
    flat.push_back(3);
    flat.push_back(-2);
  }
  const IslandPartition part = islands(flat, 7, spec, 1);
  CHECK(part.components.size() == 1);
  CHECK(part.size_of(0) == 7);
}

TEST_CASE("islands: gamma = 0 connects only co-located agents") {
  const GridSpec spec{1, 4};
  const std::vector<Coord> flat{0, 0, 1};
  const IslandPartition part = islands(flat, 3, spec, 0);
  CHECK(part.label[0] == part.label[1]);
  CHECK(part.label[0] != part.label[2]);
}

TEST_CASE("islands match the naive all-pairs oracle on random placements") {
  RngStream rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const GridSpec spec{3, 6};
    const int m = 5 + static_cast<int>(rng.next_below(196));
    std::vector<Coord> flat;
    for (int i = 0; i < m * 3; ++i)
      flat.push_back(static_cast<Coord>(rng.next_below(13)) - 6);
    const double gamma = 2;
    const IslandPartition fast = islands(flat, m, spec, gamma);
    const IslandPartition slow = islands_naive(flat, m, spec, gamma);
    REQUIRE(fast.components.size() == slow.components.size());
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < i; ++j)
        REQUIRE((fast.label[i] == fast.label[j]) == (slow.label[i] == slow.label[j]));
  }
}

TEST_CASE("golden scripted scenario: events and tree structure") {
  const auto scenario = testing::golden_tree_scenario();
  const DiffusionTrace trace = run_scripted(scenario.config, scenario.frames);

  // infection wave: {0,1,2,3,7} at 0; +{4,6,9} at 20; +{10,5} at 40; +{8} at 60
  std::map<std::int64_t, std::set<int>> by_time;
  for (const Event& e : trace.events) by_time[e.t].insert(e.infectee);
  CHECK(by_time[0] == std::set<int>{1, 2, 3, 7});
  CHECK(by_time[20] == std::set<int>{4, 6, 9});
  CHECK(by_time[40] == std::set<int>{5, 10});
  CHECK(by_time[60] == std::set<int>{8});
  CHECK(trace.final_time == 60);

  const DiffusionTree tree = build_diffusion_tree(trace, nullptr, 60);
  REQUIRE_FALSE(tree.empty);
  CHECK(tree.children(DiffusionTree::kRoot) == std::vector<int>{0, 1, 2, 3, 7});
  CHECK(tree.direct_children(0) == std::vector<int>{4, 8});
  CHECK(tree.children(0) == std::vector<int>{4, 6, 9, 8});
  CHECK(tree.direct_children(3) == std::vector<int>{10});
  CHECK(tree.direct_children(6) == std::vector<int>{5});
  CHECK(tree_height(tree) == 4);

  // level sets match the expected generations
  std::set<int> level2, level3;
  for (int agent : tree.agents) {
    if (tree.level.at(agent) == 2) level2.insert(agent);
    if (tree.level.at(agent) == 3) level3.insert(agent);
  }
  CHECK(level2 == std::set<int>{4, 6, 9, 8, 10});
  CHECK(level3 == std::set<int>{5});
}

TEST_CASE("golden scripted scenario: text export matches the golden file") {
  const auto scenario = testing::golden_tree_scenario();
  const DiffusionTrace trace = run_scripted(scenario.config, scenario.frames);
  const DiffusionTree tree = build_diffusion_tree(trace, nullptr, 60);

  std::ifstream golden(std::string(GOLDEN_DIR) + "/scripted_tree.txt");
  REQUIRE(golden.good());
  std::string expected;
  std::getline(golden, expected);
  CHECK(tree_to_text(tree) == expected);

  const auto json = tree_to_json(tree);
  CHECK(json.at("height").get<int>() == 4);
  CHECK(json.at("nodes").size() == 11);
}

TEST_CASE("tree windows and anchor regions") {
  const auto scenario = testing::golden_tree_scenario();
  const DiffusionTrace trace = run_scripted(scenario.config, scenario.frames);

  // nothing within the window beyond the initial island
  const DiffusionTree small = build_diffusion_tree(trace, nullptr, 10);
  CHECK(small.agents.size() == 5);
  CHECK(tree_height(small) == 2);

  // origin outside the anchor set: empty tree, not an error
  const RegionPredicate nowhere = [](std::span<const Coord>) { return false; };
  const DiffusionTree empty = build_diffusion_tree(trace, nowhere, 60);
  CHECK(empty.empty);
  CHECK(tree_height(empty) == 0);
  CHECK(tree_to_text(empty) == "()");

  // standard-rule traces are rejected
  DiffusionTrace standard = trace;
  standard.config.rule = Rule::Standard;
  CHECK_THROWS_AS(build_diffusion_tree(standard, nullptr, 60), std::invalid_argument);
}

TEST_CASE("generation distances from the scripted positions") {
  const auto scenario = testing::golden_tree_scenario();
  const DiffusionTrace trace = run_scripted(scenario.config, scenario.frames);
  const DiffusionTree tree = build_diffusion_tree(trace, nullptr, 60);

  // first-level nodes sit at distance 0 by definition
  for (int agent : {0, 1, 2, 3, 7}) CHECK(generation_distance(tree, trace, agent) == 0);

  // node 4 was infected at (20,0) at t=20; its parent 0 at (0,0) at t=0
  CHECK(generation_distance(tree, trace, 4) == 20);
  // node 5 was infected at (31,0) at t=40; its parent 6 at (22,0) at t=20
  CHECK(generation_distance(tree, trace, 5) == 9);

  CHECK_THROWS_AS(generation_distance(tree, trace, 99), std::invalid_argument);
}

TEST_CASE("generation distance on hand-built two-hop traces") {
  SimConfig config;
  config.spec = {1, 8};
  config.m = 3;
  config.rule = Rule::Island;
  config.gamma = 1;

  // agent 2 is infected exactly where agent 1 was infected: distance 0
  std::vector<ScriptFrame> in_place{{0, {0, 2, 6}}, {1, {0, 1, 6}}, {2, {-2, 2, 1}}};
  const DiffusionTrace trace = run_scripted(config, in_place);
  const DiffusionTree tree = build_diffusion_tree(trace, nullptr, 2);
  REQUIRE(tree.contains(2));
  CHECK(tree.level.at(2) == 3);
  CHECK(generation_distance(tree, trace, 2) == 0);

  // two-hop scripted trace with recorded infection positions 4 apart
  std::vector<ScriptFrame> far{{0, {0, 2, 8}}, {1, {0, 1, 8}}, {2, {0, 6, 5}}};
  const DiffusionTrace far_trace = run_scripted(config, far);
  const DiffusionTree far_tree = build_diffusion_tree(far_trace, nullptr, 2);
  REQUIRE(far_tree.contains(2));
  CHECK(generation_distance(far_tree, far_trace, 2) == 4);
}

TEST_CASE("tree structure agrees with the trace on generated runs") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SimConfig config;
    config.spec = {2, 7};
    config.m = 24;
    config.rule = Rule::Island;
    config.gamma = 2;
    config.seed = 555 * seed;
    const DiffusionTrace trace = run(config);
    REQUIRE(trace.final_time >= 0);
    const DiffusionTree tree = build_diffusion_tree(trace, nullptr, trace.final_time);

    std::set<std::pair<std::int64_t, int>> direct_events;
    std::map<int, std::pair<std::int64_t, int>> closure_seed;  // infectee -> (t, seed)
    for (const Event& e : trace.events) {
      if (e.cause == CauseKind::Direct) direct_events.insert({e.t, e.infectee});
      else closure_seed[e.infectee] = {e.t, e.cause_agent};
    }
    for (int agent : tree.agents) {
      if (tree.level.at(agent) < 2) continue;
      if (tree.direct.at(agent)) {
        // every direct child's meeting event exists at its infection time
        REQUIRE(direct_events.count({tree.time.at(agent), agent}) == 1);
      } else {
        // every indirect child shares its infection time with a direct child
        // of the same parent (the closure seed of its event)
        REQUIRE(closure_seed.count(agent) == 1);
        const auto [t, seed_agent] = closure_seed.at(agent);
        REQUIRE(t == tree.time.at(agent));
        REQUIRE(tree.contains(seed_agent));
        REQUIRE(tree.direct.at(seed_agent));
        REQUIRE(tree.time.at(seed_agent) == tree.time.at(agent));
        REQUIRE(tree.parent.at(seed_agent) == tree.parent.at(agent));
      }
    }
  }
}

TEST_CASE("stopped tree prunes failed times together with their subtrees") {
  const auto scenario = testing::golden_tree_scenario();
  const DiffusionTrace trace = run_scripted(scenario.config, scenario.frames);
  const DiffusionTree tree = build_diffusion_tree(trace, nullptr, 60);

  // all-good timeline keeps the tree unchanged
  const DiffusionTree same = stopped_tree(tree, [](std::int64_t) { return true; });
  CHECK(tree_to_text(same) == tree_to_text(tree));

  // failing at t=20 removes that generation and everything below it
  const DiffusionTree pruned = stopped_tree(tree, [](std::int64_t t) { return t != 20; });
  CHECK_FALSE(pruned.contains(4));
  CHECK_FALSE(pruned.contains(6));
  CHECK_FALSE(pruned.contains(5));  // child of 6, pruned with its ancestor
  CHECK(pruned.contains(10));       // infected at 40 under a surviving parent
  CHECK(pruned.contains(8));
  CHECK(tree_height(pruned) == 3);
}

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "engine.hpp"

namespace gridflood {

// Branching-process record of an island-rule trace: a dummy root whose
// children are the initial island, then child/direct-child edges for every
// infection within the window. Parent of a direct infectee is its infector;
// parent of an island-closure infectee is the infector of the closure seed.
struct DiffusionTree {
  static constexpr int kRoot = -1;

  bool empty = true;  // origin outside the anchor set
  std::int64_t window = 0;
  std::vector<int> agents;                 // node agents, ordered by (time, agent)
  std::map<int, int> parent;               // agent -> parent agent (kRoot for level 1)
  std::map<int, std::int64_t> time;        // agent -> infection time
  std::map<int, bool> direct;              // agent -> directly infected flag
  std::map<int, int> level;                // agent -> level (root = 0)
  std::map<int, std::vector<int>> kids;    // parent agent (or kRoot) -> children

  bool contains(int agent) const { return parent.count(agent) != 0; }

  std::vector<int> children(int agent) const {
    auto it = kids.find(agent);
    return it == kids.end() ? std::vector<int>{} : it->second;
  }

  std::vector<int> direct_children(int agent) const {
    std::vector<int> out;
    for (int c : children(agent))
      if (direct.at(c)) out.push_back(c);
    return out;
  }
};

using RegionPredicate = std::function<bool(std::span<const Coord>)>;

namespace detail {

inline void index_tree_levels(DiffusionTree& tree) {
  tree.agents.clear();
  std::vector<std::pair<std::pair<std::int64_t, int>, int>> order;
  for (const auto& [agent, t] : tree.time) order.push_back({{t, agent}, agent});
  std::sort(order.begin(), order.end());
  for (const auto& [key, agent] : order) tree.agents.push_back(agent);
  for (int agent : tree.agents) {
    const int p = tree.parent.at(agent);
    tree.level[agent] = p == DiffusionTree::kRoot ? 1 : tree.level.at(p) + 1;
    tree.kids[p].push_back(agent);
  }
  for (auto& [p, v] : tree.kids)
    std::sort(v.begin(), v.end(), [&](int a, int b) {
      return std::make_pair(tree.time.at(a), a) < std::make_pair(tree.time.at(b), b);
    });
}

}  // namespace detail

// Builds the diffusion tree of an island-rule trace with respect to the
// anchor region (nullptr admits every origin) and the time window.
inline DiffusionTree build_diffusion_tree(const DiffusionTrace& trace,
                                          const RegionPredicate& region, std::int64_t window) {
  if (trace.config.rule != Rule::Island)
    throw std::invalid_argument("diffusion tree requires an island-rule trace");
  DiffusionTree tree;
  tree.window = window;

  if (region) {
    const auto t0 = trace.positions_at(0);
    if (!t0) throw std::invalid_argument("diffusion tree with a region needs t=0 positions");
    const std::span<const Coord> origin(t0->data(), static_cast<std::size_t>(trace.config.spec.d));
    if (!region(origin)) return tree;  // empty tree, not an error
  }
  tree.empty = false;

  tree.parent[0] = DiffusionTree::kRoot;
  tree.time[0] = 0;
  tree.direct[0] = false;

  // Infector of each direct event, for closure-seed parent lookup.
  std::map<int, int> direct_infector;
  for (const Event& e : trace.events) {
    if (e.t > window) break;
    if (e.t == 0) {
      tree.parent[e.infectee] = DiffusionTree::kRoot;  // initial island
      tree.time[e.infectee] = 0;
      tree.direct[e.infectee] = false;
      continue;
    }
    if (e.cause == CauseKind::Direct) {
      direct_infector[e.infectee] = e.cause_agent;
      tree.parent[e.infectee] = e.cause_agent;
      tree.time[e.infectee] = e.t;
      tree.direct[e.infectee] = true;
    } else {
      auto it = direct_infector.find(e.cause_agent);
      if (it == direct_infector.end())
        throw std::invalid_argument("trace: island closure with unknown direct seed");
      tree.parent[e.infectee] = it->second;
      tree.time[e.infectee] = e.t;
      tree.direct[e.infectee] = false;
    }
  }
  detail::index_tree_levels(tree);
  return tree;
}

// Induced subtree of the nodes whose infection time passes the goodness
// predicate; a node with a pruned ancestor is pruned with it.
inline DiffusionTree stopped_tree(const DiffusionTree& tree,
                                  const std::function<bool(std::int64_t)>& goodness) {
  DiffusionTree out;
  out.window = tree.window;
  out.empty = tree.empty;
  if (tree.empty) return out;
  for (int agent : tree.agents) {
    const int p = tree.parent.at(agent);
    const bool parent_alive = p == DiffusionTree::kRoot || out.contains(p);
    if (!parent_alive) continue;
    if (!goodness(tree.time.at(agent))) continue;
    out.parent[agent] = p;
    out.time[agent] = tree.time.at(agent);
    out.direct[agent] = tree.direct.at(agent);
  }
  detail::index_tree_levels(out);
  return out;
}

// Number of levels, root counted as one; an empty tree has height 0.
inline int tree_height(const DiffusionTree& tree) {
  if (tree.empty) return 0;
  int deepest = 0;
  for (const auto& [agent, lv] : tree.level) deepest = std::max(deepest, lv);
  return deepest + 1;
}

// L1 distance between where a node and its parent were infected; zero for
// first-level nodes. Needs the trace's position log at both infection times.
inline long long generation_distance(const DiffusionTree& tree, const DiffusionTrace& trace,
                                     int agent) {
  if (!tree.contains(agent)) throw std::invalid_argument("generation_distance: unknown node");
  if (tree.level.at(agent) < 2) return 0;
  const int parent = tree.parent.at(agent);
  const auto child_pos = trace.positions_at(tree.time.at(agent));
  const auto parent_pos = trace.positions_at(tree.time.at(parent));
  if (!child_pos || !parent_pos)
    throw std::invalid_argument("generation_distance: missing positions in trace log");
  const int d = trace.config.spec.d;
  const std::span<const Coord> a(child_pos->data() + static_cast<std::size_t>(agent) * d,
                                 static_cast<std::size_t>(d));
  const std::span<const Coord> b(parent_pos->data() + static_cast<std::size_t>(parent) * d,
                                 static_cast<std::size_t>(d));
  return l1_distance(a, b);
}

// Parenthesized text form: (r (0 (4*@20) ...)); '*' marks direct infection,
// '@t' the infection time.
inline std::string tree_to_text(const DiffusionTree& tree) {
  if (tree.empty) return "()";
  std::ostringstream out;
  std::function<void(int)> emit = [&](int agent) {
    out << '(';
    if (agent == DiffusionTree::kRoot) {
      out << 'r';
    } else {
      out << agent;
      if (tree.direct.at(agent)) out << '*';
      out << '@' << tree.time.at(agent);
    }
    for (int c : tree.children(agent)) {
      out << ' ';
      emit(c);
    }
    out << ')';
  };
  emit(DiffusionTree::kRoot);
  return out.str();
}

inline nlohmann::ordered_json tree_to_json(const DiffusionTree& tree) {
  nlohmann::ordered_json j;
  j["empty"] = tree.empty;
  j["window"] = tree.window;
  j["height"] = tree_height(tree);
  j["nodes"] = nlohmann::ordered_json::array();
  for (int agent : tree.agents) {
    nlohmann::ordered_json node;
    node["id"] = agent;
    node["parent"] = tree.parent.at(agent);
    node["time"] = tree.time.at(agent);
    node["direct"] = tree.direct.at(agent);
    j["nodes"].push_back(node);
  }
  return j;
}

}  // namespace gridflood

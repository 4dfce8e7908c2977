// Minimal tour: run one diffusion, rebuild its tree, and print a few of the
// analysis quantities.

#include <iostream>

#include "gridflood/engine.hpp"
#include "gridflood/subcube.hpp"
#include "gridflood/tree.hpp"

int main() {
  using namespace gridflood;

  SimConfig config;
  config.spec = {3, 10};
  config.m = 200;
  config.rule = Rule::Island;
  config.gamma = 2;
  config.seed = 7;
  config.log_positions = true;

  const DiffusionTrace trace = run(config);
  std::cout << "diffusion time T = " << trace.final_time << " with " << trace.events.size()
            << " infection events\n";

  const DiffusionTree tree = build_diffusion_tree(trace, nullptr, trace.final_time);
  std::cout << "diffusion tree height = " << tree_height(tree) << " over " << tree.agents.size()
            << " nodes\n";

  // subcube view of the final logged state
  const auto& last = trace.log_positions.back();
  std::vector<std::uint8_t> infected(static_cast<std::size_t>(config.m), 1);
  const SubcubeView view = subcube_view(last, infected, config.m, config.spec, 5);
  std::cout << "good subcubes at the end: " << view.good_cubes.size() << " of "
            << view.cube_count() << "\n";
  return 0;
}

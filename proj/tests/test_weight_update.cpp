/*
Copyright 2026 The memplan Authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/


#include <algorithm>

#include "doctest.h"
#include "memplan/graphgen.hpp"
#include "memplan/planner.hpp"
#include "memplan/weight_update.hpp"

using namespace memplan;

namespace {

OpId op_named(const Graph& g, std::string_view name) {
  for (const auto& op : g.ops()) {
    if (op.name == name) return op.id;
  }
  FAIL("no op " << name);
  return kNoOp;
}

}  // namespace

TEST_CASE("activation estimates of the crafted scenario") {
  const auto g = gen_delay_scenario();
  const WeightUpdateModel model(g);
  // x0 + a1 + a2
  CHECK(model.esti_pm() == 36 * kMiB);
  const int t_f2bwd = model.bounds().asap[static_cast<size_t>(op_named(g, "f2.bwd"))];
  CHECK(t_f2bwd == 4);
  CHECK(model.mem_atvs(t_f2bwd) == 36 * kMiB);
  CHECK(model.mem_atvs(0) == 4 * kMiB);
  const auto c = model.cost(t_f2bwd, 32 * kMiB, 3.0);
  CHECK(c.esti_pm == 36 * kMiB);
  CHECK(c.mem_atvs == 36 * kMiB);
  CHECK(c.mem_used == doctest::Approx(static_cast<double>(132 * kMiB)));
  // 170 MiB over 13 tensors.
  CHECK(model.mean_tensor_size() == doctest::Approx(170.0 * kMiB / 13.0));
}

TEST_CASE("large Adam gradient is delayed, small one is not") {
  const auto g = gen_delay_scenario();
  const auto tree = build_subgraph_tree(g, 20);
  REQUIRE(tree.branches.size() == 2);
  const auto plan = place_weight_updates(g, tree, WeightUpdateConfig{});
  REQUIRE(plan.branches.size() == 2);
  int big = tree.branches[0].grad_size > tree.branches[1].grad_size ? 0 : 1;
  const auto& b = plan.branches[static_cast<size_t>(big)];
  const auto& s = plan.branches[static_cast<size_t>(1 - big)];
  CHECK(b.alpha == 3.0);
  CHECK(b.ratio > 2.0);
  CHECK(b.mem_used > static_cast<double>(plan.esti_pm));
  CHECK(b.delayed);
  CHECK(b.unit > tree.branches[static_cast<size_t>(big)].ready_unit);
  CHECK_FALSE(s.delayed);
  CHECK(s.unit == tree.branches[static_cast<size_t>(1 - big)].ready_unit);
}

TEST_CASE("delaying the crafted branch lowers the peak") {
  const auto g = gen_delay_scenario();
  PlannerConfig cfg;
  const auto planned = plan(g, cfg);
  CHECK(planned.weight_update_policy == "heuristic");

  auto tree = build_subgraph_tree(g, cfg.node_limit);
  assign_branch_units(tree, immediate_weight_updates(tree).units());
  const auto units = solve_units(g, tree, cfg);
  const auto immediate = assemble_order(g, tree, units, 1);
  CHECK(planned.stats.theoretical_peak < immediate.peak);
}

TEST_CASE("no delay below the radius") {
  const auto g = gen_delay_scenario();
  const auto tree = build_subgraph_tree(g, 20);
  WeightUpdateConfig cfg;
  cfg.delay_radius = 100.0;
  for (const auto& p : place_weight_updates(g, tree, cfg).branches) CHECK_FALSE(p.delayed);
}

TEST_CASE("alpha lookup") {
  WeightUpdateConfig cfg;
  CHECK(alpha_for(cfg, "adam") == 3.0);
  CHECK(alpha_for(cfg, "sgd") == 1.0);
  CHECK_THROWS_AS(alpha_for(cfg, "lion"), ConfigError);
  cfg.alpha["default"] = 2.0;
  CHECK(alpha_for(cfg, "lion") == 2.0);

  const auto g = gen_training_graph(Arch::kMlp, 1, {}, Optimizer::kAdam, 0);
  const auto tree = build_subgraph_tree(g, 20);
  for (const auto& b : tree.branches) CHECK(optimizer_of(g, b) == "adam");
}

TEST_CASE("uniform placements") {
  const auto g = gen_training_graph(Arch::kResidual, 2, {}, Optimizer::kSgd, 1);
  const auto tree = build_subgraph_tree(g, 20);
  const auto now = immediate_weight_updates(tree);
  const auto later = deferred_weight_updates(tree);
  const int last = static_cast<int>(tree.timeline.size()) - 1;
  for (size_t i = 0; i < tree.branches.size(); ++i) {
    CHECK(now.branches[i].unit == tree.branches[i].ready_unit);
    CHECK_FALSE(now.branches[i].delayed);
    CHECK(later.branches[i].unit == last);
  }
}

TEST_CASE("planner never loses to immediate updates on generated graphs") {
  for (auto arch : {Arch::kMlp, Arch::kResidual, Arch::kTransformer}) {
    for (auto opt : {Optimizer::kSgd, Optimizer::kAdam}) {
      const auto g = gen_training_graph(arch, 2, {}, opt, 7);
      PlannerConfig cfg;
      const auto planned = plan(g, cfg);
      auto tree = build_subgraph_tree(g, cfg.node_limit);
      assign_branch_units(tree, immediate_weight_updates(tree).units());
      const auto immediate = assemble_order(g, tree, solve_units(g, tree, cfg), 1);
      CAPTURE(to_string(arch));
      CAPTURE(to_string(opt));
      CHECK(planned.stats.theoretical_peak <= immediate.peak);
    }
  }
}

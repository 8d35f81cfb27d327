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
#include "memplan/layout.hpp"
#include "memplan/ordering.hpp"
#include "memplan/planner.hpp"

using namespace memplan;

TEST_CASE("generators are deterministic") {
  for (auto arch : {Arch::kMlp, Arch::kResidual, Arch::kTransformer}) {
    CHECK(gen_training_graph(arch, 3, {}, Optimizer::kAdam, 8) == gen_training_graph(arch, 3, {}, Optimizer::kAdam, 8));
  }
  RandomDagOptions o;
  o.seed = 12;
  CHECK(gen_random_dag(o) == gen_random_dag(o));
  CHECK(gen_greedy_trap(3) == gen_greedy_trap(3));
}

TEST_CASE("training graphs are well formed") {
  for (auto arch : {Arch::kMlp, Arch::kResidual, Arch::kTransformer}) {
    for (auto opt : {Optimizer::kSgd, Optimizer::kAdam}) {
      for (int blocks : {1, 3}) {
        const auto g = gen_training_graph(arch, blocks, {}, opt, 1);
        CAPTURE(to_string(arch));
        CAPTURE(to_string(opt));
        CHECK(validate_graph(g).ok());
        CHECK(g.has_kind(OpKind::kLoss));
        CHECK(g.has_kind(OpKind::kBackward));
        CHECK(g.has_kind(OpKind::kWeightUpdate));
        const auto cats = classify_tensors(g);
        for (const auto& t : g.tensors()) {
          const bool fwd = g.op(t.producer).kind == OpKind::kForward;
          const bool to_bwd = std::any_of(t.consumers.begin(), t.consumers.end(),
                                          [&](OpId c) { return g.op(c).kind == OpKind::kBackward; });
          CHECK((cats[static_cast<size_t>(t.id)] == TensorCategory::kActivation) == (fwd && to_bwd));
        }
        for (const auto& op : g.ops()) {
          if (op.kind == OpKind::kWeightUpdate) CHECK(op.name.starts_with(std::string(to_string(opt)) + "/"));
        }
      }
    }
  }
}

TEST_CASE("an Adam branch fits in three gradients") {
  const auto g = gen_training_graph(Arch::kMlp, 1, {}, Optimizer::kAdam, 0);
  const auto p = plan(g, PlannerConfig{});
  const auto items = layout_items(g, p.schedule);
  // Pick the branch of the first gradient: its m/v/step tensors plus the gradient.
  const auto tree = build_subgraph_tree(g, 20);
  REQUIRE_FALSE(tree.branches.empty());
  const auto& branch = tree.branches.front();
  std::vector<TensorId> mine{branch.gradient};
  for (OpId v : branch.ops) {
    for (TensorId t : g.op(v).outputs) mine.push_back(t);
  }
  LayoutProblem lp;
  for (TensorId t : mine) lp.items.push_back(items[static_cast<size_t>(t)]);
  REQUIRE(lp.items.size() == 4);
  const auto sol = exact_layout(lp);
  CHECK(sol.optimal);
  CHECK(sol.layout.capacity == 3 * branch.grad_size);
}

TEST_CASE("random DAGs follow the options") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RandomDagOptions o;
    o.ops = 3 + static_cast<int>(seed % 10);
    o.max_size_mib = 4;
    o.seed = seed;
    const auto g = gen_random_dag(o);
    CHECK(g.num_ops() == o.ops);
    CHECK(validate_graph(g).ok());
    for (const auto& t : g.tensors()) {
      CHECK(t.size >= kMiB);
      CHECK(t.size <= 4 * kMiB);
      for (OpId c : t.consumers) CHECK(c > t.producer);
    }
  }
}

TEST_CASE("greedy trap beats least-increase greedy") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = make_ordering_problem(gen_greedy_trap(seed));
    const auto exact = exact_order(p);
    CAPTURE(seed);
    CHECK(exact.optimal);
    CHECK(exact.peak < greedy_order(p).peak);
  }
}

TEST_CASE("generator arguments are checked") {
  CHECK_THROWS_AS(gen_training_graph(Arch::kMlp, 0, {}, Optimizer::kSgd, 0), ConfigError);
  CHECK_THROWS_AS(parse_arch("lstm"), ConfigError);
  CHECK(parse_arch("transformer") == Arch::kTransformer);
  CHECK(parse_optimizer("adam") == Optimizer::kAdam);
}

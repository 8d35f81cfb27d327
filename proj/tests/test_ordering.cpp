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


#include "doctest.h"
#include "fixtures.hpp"
#include "memplan/graphgen.hpp"
#include "memplan/ordering.hpp"
#include "oracles.hpp"

using namespace memplan;

TEST_CASE("diamond: exact order runs the big consumer first") {
  const auto p = make_ordering_problem(fixture::diamond());
  const auto s = exact_order(p);
  CHECK(s.optimal);
  CHECK(s.peak == 90 * kMiB);
  CHECK(s.order == std::vector<OpId>{0, 2, 1, 3});
}

TEST_CASE("exact order matches enumeration on random graphs") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    RandomDagOptions o;
    o.ops = 4 + static_cast<int>(seed % 5);
    o.edge_density = 0.3 + 0.1 * static_cast<double>(seed % 3);
    o.seed = seed;
    const auto g = gen_random_dag(o);
    const auto p = make_ordering_problem(g);
    const auto exact = exact_order(p);
    const auto greedy = greedy_order(p);
    const Bytes truth = oracle::min_peak_sequential(g);
    CAPTURE(seed);
    CHECK(exact.optimal);
    CHECK(exact.peak == truth);
    CHECK(greedy.peak >= truth);
    const auto sched = to_schedule(p, exact);
    CHECK_NOTHROW(check_schedule(g, sched));
    CHECK(peak_memory(g, sched).peak == exact.peak);
    CHECK(evaluate_steps(p, exact.steps) == exact.peak);
    CHECK(peak_memory(g, to_schedule(p, greedy)).peak == greedy.peak);
  }
}

TEST_CASE("multi-stream exact order matches enumeration") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    RandomDagOptions o;
    o.ops = 4 + static_cast<int>(seed % 3);
    o.edge_density = 0.3;
    o.seed = 100 + seed;
    const auto g = gen_random_dag(o);
    auto p = make_ordering_problem(g);
    p.ops_per_step = 2;
    const auto exact = exact_order(p);
    CAPTURE(seed);
    CHECK(exact.optimal);
    CHECK(exact.peak == oracle::min_peak_multi(g, 2));
    const auto sched = to_schedule(p, exact);
    CHECK_NOTHROW(check_schedule(g, sched));
    CHECK(peak_memory(g, sched).peak == exact.peak);
    const auto greedy = greedy_order(p);
    CHECK(greedy.peak >= exact.peak);
    CHECK_NOTHROW(check_schedule(g, to_schedule(p, greedy)));
  }
}

TEST_CASE("greedy trap") {
  const auto g = gen_greedy_trap(1);
  const auto p = make_ordering_problem(g);
  const auto exact = exact_order(p);
  CHECK(greedy_order(p).peak > exact.peak);
  CHECK(exact.peak == oracle::min_peak_sequential(g));
}

TEST_CASE("stretches compose into the whole-graph peak") {
  RandomDagOptions o;
  o.ops = 9;
  o.edge_density = 0.35;
  o.seed = 7;
  const auto g = gen_random_dag(o);
  const auto order = topological_order(g);
  std::vector<bool> done(static_cast<size_t>(g.num_ops()), false);
  Bytes peak = 0;
  for (size_t start = 0; start < order.size(); start += 3) {
    const std::vector<OpId> ops(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(start + 3));
    const auto p = make_ordering_problem(g, ops, done);
    std::vector<std::vector<int>> steps;
    for (int i = 0; i < 3; ++i) {
      // Local index of ops[i].
      const auto it = std::find(p.ops.begin(), p.ops.end(), ops[static_cast<size_t>(i)]);
      steps.push_back({static_cast<int>(it - p.ops.begin())});
    }
    peak = std::max(peak, evaluate_steps(p, steps));
    for (OpId v : ops) done[static_cast<size_t>(v)] = true;
  }
  CHECK(peak == peak_memory(g, Schedule::sequential(order)).peak);
}

TEST_CASE("ordering errors") {
  auto big = make_ordering_problem(fixture::chain(70, kMiB));
  CHECK_THROWS_AS(exact_order(big), ConfigError);
  CHECK(greedy_order(big).peak == 2 * kMiB);
  auto p = make_ordering_problem(fixture::diamond());
  p.budget = std::chrono::duration<double>(0);
  CHECK_THROWS_AS(exact_order(p), ConfigError);
  p.budget = std::chrono::duration<double>(60);
  CHECK_THROWS_AS(evaluate_steps(p, {{1}, {0}, {2}, {3}}), ScheduleError);
}

TEST_CASE("tiny budget still returns a valid order") {
  RandomDagOptions o;
  o.ops = 40;
  o.edge_density = 0.08;
  o.seed = 3;
  const auto g = gen_random_dag(o);
  auto p = make_ordering_problem(g);
  p.budget = std::chrono::duration<double>(1e-6);
  const auto s = exact_order(p);
  CHECK_NOTHROW(check_schedule(g, to_schedule(p, s)));
  CHECK(s.peak <= greedy_order(p).peak);
}

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
#include "memplan/graph.hpp"
#include "oracles.hpp"

using namespace memplan;

TEST_CASE("diamond peaks depend on the order") {
  const auto g = fixture::diamond();
  CHECK(validate_graph(g).ok());
  const auto abcd = peak_memory(g, Schedule::sequential({0, 1, 2, 3}));
  CHECK(abcd.peak == 120 * kMiB);
  CHECK(abcd.timestep == 1);
  CHECK(peak_memory(g, Schedule::sequential({0, 2, 1, 3})).peak == 90 * kMiB);
  CHECK(oracle::min_peak_sequential(g) == 90 * kMiB);
  CHECK(oracle::min_peak_multi(g, 2) == 90 * kMiB);
}

TEST_CASE("lifetimes and profile") {
  const auto g = fixture::diamond();
  const auto s = Schedule::sequential({0, 2, 1, 3});
  const auto live = tensor_lifetimes(g, s);
  CHECK(live[0] == Interval{0, 1});
  CHECK(live[1] == Interval{0, 2});
  CHECK(live[2] == Interval{2, 3});
  CHECK(live[3] == Interval{1, 3});
  const auto profile = memory_profile(g, s);
  REQUIRE(profile.size() == 4);
  CHECK(profile[0] == 80 * kMiB);
  CHECK(profile[1] == 90 * kMiB);
  CHECK(profile[3] == 50 * kMiB);
}

TEST_CASE("asap and alap") {
  const auto g = fixture::diamond();
  const auto b = asap_alap(g);
  CHECK(b.asap == std::vector<int>{0, 1, 1, 3});
  CHECK(b.alap == std::vector<int>{0, 2, 2, 3});
}

TEST_CASE("topological order is deterministic") {
  const auto g = fixture::diamond();
  CHECK(topological_order(g) == std::vector<OpId>{0, 1, 2, 3});
  int count = 0;
  oracle::for_each_topological_order(g, [&](const std::vector<OpId>&) { ++count; });
  CHECK(count == 2);
}

TEST_CASE("schedule checks") {
  const auto g = fixture::diamond();
  CHECK_NOTHROW(check_schedule(g, Schedule::sequential({0, 2, 1, 3})));
  CHECK_THROWS_AS(check_schedule(g, Schedule::sequential({1, 0, 2, 3})), ScheduleError);
  CHECK_THROWS_AS(check_schedule(g, Schedule::sequential({0, 1, 3})), ScheduleError);
  Schedule s;
  s.order = {0, 1, 2, 3};
  s.timestep_of = {0, 1, 1, 2};
  s.ops_per_step = 2;
  CHECK_NOTHROW(check_schedule(g, s));
  s.ops_per_step = 1;
  CHECK_THROWS_AS(check_schedule(g, s), ScheduleError);
  s.ops_per_step = 2;
  s.timestep_of = {0, 0, 1, 2};
  CHECK_THROWS_AS(check_schedule(g, s), ScheduleError);
}

TEST_CASE("validation reports structural problems") {
  GraphBuilder b;
  const auto t0 = b.add_tensor(kMiB);
  const auto t1 = b.add_tensor(0);
  b.add_op("x", OpKind::kForward, {t1}, {t0});
  b.add_op("y", OpKind::kForward, {t0}, {t1});
  const auto report = validate_graph(b.build());
  CHECK_FALSE(report.ok());
  bool cycle = false;
  bool size = false;
  for (const auto& v : report.violations) {
    cycle = cycle || v.message.find("cycle") != std::string::npos;
    size = size || v.message.find("size") != std::string::npos;
  }
  CHECK(cycle);
  CHECK(size);
}

TEST_CASE("empty graph") {
  const Graph g;
  CHECK(validate_graph(g).ok());
  CHECK(peak_memory(g, Schedule{}).peak == 0);
}

TEST_CASE("unconsumed tensors live to the end") {
  const auto g = fixture::chain(3, kMiB);
  const auto live = tensor_lifetimes(g, Schedule::sequential({0, 1, 2}));
  CHECK(live[2] == Interval{2, 2});
  CHECK(live[0] == Interval{0, 1});
}

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

#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <vector>

#include "memplan/graph.hpp"

namespace memplan {

// Operator-ordering instance for one contiguous stretch of the global
// schedule. Ops and items use local indices; `ops` maps them back.
struct OrderingProblem {
  struct Item {
    Bytes size = 0;
    int producer = -1;           // local op index, -1 for a live-in tensor
    std::vector<int> consumers;  // local op indices
    bool live_out = false;       // still needed after the stretch ends
  };

  std::vector<OpId> ops;
  std::vector<std::vector<int>> preds;  // local direct predecessors
  std::vector<Item> items;
  Bytes base = 0;  // bytes live throughout but untouched by these ops
  int ops_per_step = 1;
  std::chrono::duration<double> budget{60.0};

  int size() const { return static_cast<int>(ops.size()); }
};

// Builds the problem for running `ops` right after every op in `done`.
// Ops outside both sets are assumed to run later.
OrderingProblem make_ordering_problem(const Graph& g, std::span<const OpId> ops,
                                      const std::vector<bool>& done);

// The whole graph as one problem.
OrderingProblem make_ordering_problem(const Graph& g);

struct OrderingSolution {
  // Local step groups; each inner vector holds the local ops of one timestep.
  std::vector<std::vector<int>> steps;
  std::vector<OpId> order;  // global op ids in execution order
  Bytes peak = 0;
  bool optimal = false;
  std::uint64_t nodes = 0;
  double seconds = 0.0;
};

// Peak of running the given step groups. Throws ScheduleError if the groups
// are not a valid execution of the problem.
Bytes evaluate_steps(const OrderingProblem& p, const std::vector<std::vector<int>>& steps);

// Minimum-peak ordering by depth-first branch and bound over partial
// schedules (downsets), memoized on the set of executed ops. Anytime: the
// greedy order seeds the incumbent; `optimal` is set when the search
// completes inside the budget. Supports at most 64 ops.
OrderingSolution exact_order(const OrderingProblem& p);

// Least-memory-increase list scheduling: among ready ops, run the one whose
// outputs minus the inputs it releases is smallest; ties by op id.
OrderingSolution greedy_order(const OrderingProblem& p);

// Expands a solution into a Schedule when the problem covers the whole graph.
Schedule to_schedule(const OrderingProblem& p, const OrderingSolution& s);

}  // namespace memplan

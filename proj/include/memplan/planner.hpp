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
#include <string>
#include <vector>

#include "memplan/graph.hpp"
#include "memplan/layout.hpp"
#include "memplan/ordering.hpp"
#include "memplan/segmentation.hpp"
#include "memplan/weight_update.hpp"

namespace memplan {

struct PlannerConfig {
  int node_limit = 20;    // largest gap ordered exactly
  int layout_limit = 24;  // largest connected item group laid out exactly
  WeightUpdateConfig weight_updates;
  int ops_per_step = 1;
  std::chrono::duration<double> order_budget{60.0};
  std::chrono::duration<double> layout_budget{60.0};
  int workers = 1;

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

struct LeafStats {
  int node = -1;
  int ops = 0;
  int items = 0;
  Bytes order_peak = 0;
  bool order_optimal = true;
  bool layout_optimal = true;
  std::uint64_t order_nodes = 0;
  std::uint64_t layout_nodes = 0;
  double order_seconds = 0.0;
  double layout_seconds = 0.0;
};

struct PlanStats {
  Bytes theoretical_peak = 0;
  Bytes capacity = 0;
  double fragmentation_pct = 0.0;
  int optimal_leaves = 0;
  int total_leaves = 0;

  friend bool operator==(const PlanStats&, const PlanStats&) = default;
};

struct ExecutionPlan {
  Schedule schedule;
  MemoryLayout layout;
  PlanStats stats;
  std::vector<LeafStats> leaves;
  WeightUpdatePlan weight_updates;
  std::string weight_update_policy;  // "heuristic", "immediate" or "deferred"
};

// Per-unit solutions of a tree, keyed by timeline unit.
struct AssembledOrder {
  Schedule schedule;
  Bytes peak = 0;  // max over unit peaks
};

// Orders every timeline unit of the tree (exactly when it has at most
// node_limit ops) and returns the per-unit solutions.
std::vector<OrderingSolution> solve_units(const Graph& g, const SubgraphTree& tree, const PlannerConfig& cfg);

// Concatenates unit orders in timeline order. Throws InvariantError when the
// evaluated peak disagrees with the per-unit peaks.
AssembledOrder assemble_order(const Graph& g, const SubgraphTree& tree,
                              const std::vector<OrderingSolution>& units, int ops_per_step);

ExecutionPlan plan(const Graph& g, const PlannerConfig& cfg);

// Stats recomputed from a schedule/layout pair.
PlanStats recompute_stats(const Graph& g, const Schedule& s, const MemoryLayout& m);

struct BaselineRow {
  std::string order;
  std::string layout;
  Bytes theoretical_peak = 0;
  Bytes capacity = 0;
  double fragmentation_pct = 0.0;
  double tp_reduction_pct = 0.0;        // planner vs this row
  double capacity_reduction_pct = 0.0;  // planner vs this row
};

struct Comparison {
  BaselineRow planner;
  std::vector<BaselineRow> rows;
};

// Baseline names: definition-order, greedy-order, llfb-layout,
// caching-allocator. Orders and layouts are crossed; a missing side defaults
// to definition-order / llfb-layout, an empty list runs everything.
Comparison compare_baselines(const Graph& g, const PlannerConfig& cfg, const std::vector<std::string>& baselines);

}  // namespace memplan

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

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "memplan/graph.hpp"
#include "memplan/layout.hpp"
#include "memplan/planner.hpp"

namespace memplan {

// Graph interchange documents. Ids in the document become tensor/op keys;
// ops keep document order. Throws GraphError on malformed input.
Graph parse_graph(std::string_view text);
std::string graph_to_json(const Graph& g);

// Per-tensor record carried in plan documents so they render standalone.
struct PlannedTensor {
  std::int64_t id = 0;
  std::string producer;
  std::string category;
  Bytes size = 0;
  Interval live;
  Bytes offset = 0;
};

struct PlanDocument {
  std::vector<std::int64_t> schedule;          // op keys in execution order
  std::map<std::int64_t, int> timesteps;       // op key -> timestep
  std::map<std::int64_t, Bytes> layout;        // tensor key -> offset
  Bytes capacity = 0;
  int ops_per_step = 1;
  PlanStats stats;
  std::string weight_update_policy;
  std::vector<LeafStats> leaves;
  std::vector<PlannedTensor> tensors;
};

PlanDocument make_plan_document(const Graph& g, const ExecutionPlan& p);
// Deterministic: solver timings are left out.
std::string plan_to_json(const PlanDocument& doc);
// Throws InputError on malformed input.
PlanDocument parse_plan(std::string_view text);

// Schedule and layout of a plan document expressed against g. Throws
// InputError when the document names ops or tensors g does not have.
struct BoundPlan {
  Schedule schedule;
  MemoryLayout layout;
};
BoundPlan bind_plan(const Graph& g, const PlanDocument& doc);

// x = timestep, y = byte offset, one rectangle per tensor.
std::string render_svg(const PlanDocument& doc);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view text);

}  // namespace memplan

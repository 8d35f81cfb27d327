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

#include <optional>
#include <vector>

#include "memplan/graph.hpp"

namespace memplan {

// Ops comparable with every other op (among `considered`, or all ops when
// empty); their position in any schedule is fixed. Sorted by id.
std::vector<OpId> find_memory_insensitive(const Graph& g, const std::vector<bool>& considered = {});

// Ops strictly between two memory-insensitive boundaries. `lo`/`hi` are
// kNoOp for the open stretch before the first / after the last boundary.
struct Segment {
  OpId lo = kNoOp;
  OpId hi = kNoOp;
  std::vector<OpId> members;
};

std::vector<Segment> independent_segments(const Graph& g, const std::vector<bool>& considered = {});

enum class SubgraphKind { kRoot, kIndependent, kDependent };
enum class SharedTensorType { kCIFO, kCOFI, kCOFO };

// A stretch of the global execution timeline: either one memory-insensitive
// op (a boundary) or the gap between two boundaries. Gaps and boundaries
// alternate, starting and ending with a (possibly empty) gap.
struct TimeUnit {
  std::vector<OpId> ops;  // forward/backward/loss ops, sorted
  bool boundary = false;
  int leaf = -1;  // owning leaf node
};

struct SubgraphNode {
  SubgraphKind kind = SubgraphKind::kRoot;
  OpId outer_fwd = kNoOp;
  OpId inner_fwd = kNoOp;
  OpId inner_bwd = kNoOp;
  OpId outer_bwd = kNoOp;
  std::vector<int> units;     // timeline units covered, ascending
  std::vector<OpId> ops;      // member ops including attached weight updates
  std::vector<int> children;  // node indices
  std::vector<TensorId> owned_tensors;
  bool unsplittable = false;

  bool is_leaf() const { return children.empty(); }
};

// Connected group of weight-update ops fed by one gradient.
struct WeightUpdateBranch {
  std::vector<OpId> ops;
  TensorId gradient = -1;
  Bytes grad_size = 0;
  int ready_unit = 0;  // first gap unit where the gradient is available
};

struct SubgraphTree {
  std::vector<SubgraphNode> nodes;  // nodes[0] is the root
  std::vector<TimeUnit> timeline;
  // Leaf node ids in memory stacking order: longest-lived activations first.
  std::vector<int> leaves;
  std::vector<WeightUpdateBranch> branches;
  std::vector<int> branch_unit;  // gap unit each branch currently runs in
  bool training = false;

  const SubgraphNode& root() const { return nodes.front(); }
  // Ops executed in a unit, including weight-update branches placed there.
  std::vector<OpId> unit_ops(int unit) const;
  int first_backward_unit = 0;
};

// Training decomposition: independent subgraphs pair a forward stretch with
// the backward stretch that consumes its activations, growing outward from
// the loss; oversized ones split into dependent subgraphs. Weight-update
// branches start in the gap where their gradient becomes available.
// Throws StructureError when the graph has no backward pass.
SubgraphTree build_subgraph_tree(const Graph& g, int node_limit);

// Inference decomposition: consecutive independent segments grouped into
// leaves of at most node_limit ops.
SubgraphTree build_segment_tree(const Graph& g, int node_limit);

// Moves each branch to the given gap unit and refreshes node membership.
void assign_branch_units(SubgraphTree& tree, const std::vector<int>& units);

// CIFO/COFI/COFO status of a tensor relative to a subgraph, given the op
// that releases it; nullopt when the tensor is created and freed inside.
std::optional<SharedTensorType> classify_shared_tensor(const Graph& g, TensorId t,
                                                       const SubgraphNode& node, OpId last_consumer);

// The op that releases t: its consumer in the latest unit (ties by larger
// id), or kNoOp for tensors without consumers.
OpId last_consumer(const SubgraphTree& tree, const Graph& g, TensorId t);

// Owning leaf node for every tensor; also fills owned_tensors of the leaves.
std::vector<int> assign_shared_tensors(SubgraphTree& tree, const Graph& g);

}  // namespace memplan

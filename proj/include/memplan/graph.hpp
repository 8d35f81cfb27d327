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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "memplan/types.hpp"

namespace memplan {

enum class OpKind { kForward, kBackward, kWeightUpdate, kLoss };

enum class TensorCategory {
  kActivation,
  kTemporaryBuffer,
  kGradient,
  kWeight,
  kOptimizerState,
};

std::string_view to_string(OpKind kind);
std::string_view to_string(TensorCategory category);
OpKind parse_op_kind(std::string_view text);
TensorCategory parse_tensor_category(std::string_view text);

struct OpNode {
  OpId id = kNoOp;
  std::string name;
  OpKind kind = OpKind::kForward;
  std::vector<TensorId> inputs;
  std::vector<TensorId> outputs;
  // Identifier used by the interchange document.
  std::int64_t key = 0;
};

struct TensorInfo {
  TensorId id = -1;
  Bytes size = 0;
  OpId producer = kNoOp;
  std::vector<OpId> consumers;
  // Set when the document tags the tensor explicitly (weights, optimizer
  // state); otherwise derived by classify_tensors().
  std::optional<TensorCategory> category;
  std::int64_t key = 0;
};

// Directed computation graph: operators are vertices, tensors are edges from
// their producer to each consumer. Immutable once constructed. Op and tensor
// ids are dense (0..n-1) and equal to their index.
class Graph {
 public:
  Graph() = default;

  // Rebuilds producer/consumer maps from the op lists. Throws GraphError on
  // references to nonexistent tensors. Structural properties (acyclicity,
  // single producer, positive sizes) are left to validate_graph().
  Graph(std::vector<OpNode> ops, std::vector<TensorInfo> tensors);

  const std::vector<OpNode>& ops() const { return ops_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const OpNode& op(OpId id) const { return ops_.at(static_cast<size_t>(id)); }
  const TensorInfo& tensor(TensorId id) const {
    return tensors_.at(static_cast<size_t>(id));
  }
  int num_ops() const { return static_cast<int>(ops_.size()); }
  int num_tensors() const { return static_cast<int>(tensors_.size()); }
  bool empty() const { return ops_.empty(); }

  // Direct predecessor/successor ops, deduplicated and sorted.
  const std::vector<OpId>& preds(OpId id) const { return preds_[static_cast<size_t>(id)]; }
  const std::vector<OpId>& succs(OpId id) const { return succs_[static_cast<size_t>(id)]; }

  bool has_kind(OpKind kind) const;

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  std::vector<OpNode> ops_;
  std::vector<TensorInfo> tensors_;
  std::vector<std::vector<OpId>> preds_;
  std::vector<std::vector<OpId>> succs_;
};

// Incremental construction used by generators and tests.
class GraphBuilder {
 public:
  TensorId add_tensor(Bytes size, std::optional<TensorCategory> category = std::nullopt);
  OpId add_op(std::string name, OpKind kind, std::vector<TensorId> inputs,
              std::vector<TensorId> outputs);
  Bytes tensor_size(TensorId id) const { return tensors_.at(static_cast<size_t>(id)).size; }
  int num_ops() const { return static_cast<int>(ops_.size()); }
  Graph build() const;

 private:
  std::vector<OpNode> ops_;
  std::vector<TensorInfo> tensors_;
};

struct Violation {
  enum class Kind { kCycle, kMultipleProducers, kNoProducer, kZeroSize };
  Kind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_graph(const Graph& g);

// Topological order by Kahn's algorithm, smallest op id first among ready
// ops. Throws GraphError if the graph has a cycle.
std::vector<OpId> topological_order(const Graph& g);

// Transitive closure. ancestors(v) excludes v itself.
class Reachability {
 public:
  explicit Reachability(const Graph& g);
  const boost::dynamic_bitset<>& ancestors(OpId v) const { return anc_[static_cast<size_t>(v)]; }
  const boost::dynamic_bitset<>& descendants(OpId v) const { return desc_[static_cast<size_t>(v)]; }
  bool reaches(OpId from, OpId to) const { return desc_[static_cast<size_t>(from)].test(static_cast<size_t>(to)); }
  bool comparable(OpId a, OpId b) const { return a == b || reaches(a, b) || reaches(b, a); }

 private:
  std::vector<boost::dynamic_bitset<>> anc_;
  std::vector<boost::dynamic_bitset<>> desc_;
};

// Earliest and latest single-streaming timestep of every op.
struct ScheduleBounds {
  std::vector<int> asap;
  std::vector<int> alap;
};

ScheduleBounds asap_alap(const Graph& g);

// Operator execution plan. order lists every op once; timestep_of maps each
// op to its step. With ops_per_step == 1 the timestep is the position.
struct Schedule {
  std::vector<OpId> order;
  std::vector<int> timestep_of;
  int ops_per_step = 1;

  static Schedule sequential(std::vector<OpId> order);
  int num_steps() const;
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

// Throws ScheduleError unless s is a valid execution plan for g.
void check_schedule(const Graph& g, const Schedule& s);

// Inclusive timestep interval.
struct Interval {
  int start = 0;
  int end = 0;
  int length() const { return end - start + 1; }
  bool overlaps(const Interval& o) const { return start <= o.end && o.start <= end; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Live interval of every tensor: from its producer's step to the last
// consumer's step; tensors without consumers stay live until the last step.
std::vector<Interval> tensor_lifetimes(const Graph& g, const Schedule& s);

struct PeakMemory {
  Bytes peak = 0;
  int timestep = 0;
};

// Theoretical peak memory of running g under s.
PeakMemory peak_memory(const Graph& g, const Schedule& s);

// Per-timestep live bytes; index = timestep.
std::vector<Bytes> memory_profile(const Graph& g, const Schedule& s);

std::vector<TensorCategory> classify_tensors(const Graph& g);

}  // namespace memplan

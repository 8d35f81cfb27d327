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

#include "memplan/graph.hpp"

#include <algorithm>
#include <queue>

namespace memplan {

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::kForward: return "forward";
    case OpKind::kBackward: return "backward";
    case OpKind::kWeightUpdate: return "weight_update";
    case OpKind::kLoss: return "loss";
  }
  return "forward";
}

std::string_view to_string(TensorCategory category) {
  switch (category) {
    case TensorCategory::kActivation: return "activation";
    case TensorCategory::kTemporaryBuffer: return "temporary_buffer";
    case TensorCategory::kGradient: return "gradient";
    case TensorCategory::kWeight: return "weight";
    case TensorCategory::kOptimizerState: return "optimizer_state";
  }
  return "temporary_buffer";
}

OpKind parse_op_kind(std::string_view text) {
  if (text == "forward") return OpKind::kForward;
  if (text == "backward") return OpKind::kBackward;
  if (text == "weight_update") return OpKind::kWeightUpdate;
  if (text == "loss") return OpKind::kLoss;
  throw GraphError("unknown op kind '" + std::string(text) + "'");
}

TensorCategory parse_tensor_category(std::string_view text) {
  if (text == "activation") return TensorCategory::kActivation;
  if (text == "temporary_buffer") return TensorCategory::kTemporaryBuffer;
  if (text == "gradient") return TensorCategory::kGradient;
  if (text == "weight") return TensorCategory::kWeight;
  if (text == "optimizer_state") return TensorCategory::kOptimizerState;
  throw GraphError("unknown tensor category '" + std::string(text) + "'");
}

Graph::Graph(std::vector<OpNode> ops, std::vector<TensorInfo> tensors)
    : ops_(std::move(ops)), tensors_(std::move(tensors)) {
  const auto n_tensors = static_cast<TensorId>(tensors_.size());
  for (size_t i = 0; i < tensors_.size(); ++i) {
    tensors_[i].id = static_cast<TensorId>(i);
    tensors_[i].producer = kNoOp;
    tensors_[i].consumers.clear();
  }
  auto check_ref = [&](const OpNode& op, TensorId t) {
    if (t < 0 || t >= n_tensors) {
      throw GraphError("op '" + op.name + "' references nonexistent tensor " +
                       std::to_string(t));
    }
  };
  for (size_t i = 0; i < ops_.size(); ++i) {
    auto& op = ops_[i];
    op.id = static_cast<OpId>(i);
    for (TensorId t : op.outputs) {
      check_ref(op, t);
      // First producer wins; duplicates are reported by validate_graph().
      if (tensors_[static_cast<size_t>(t)].producer == kNoOp) {
        tensors_[static_cast<size_t>(t)].producer = op.id;
      }
    }
    for (TensorId t : op.inputs) {
      check_ref(op, t);
      auto& consumers = tensors_[static_cast<size_t>(t)].consumers;
      if (std::find(consumers.begin(), consumers.end(), op.id) == consumers.end()) {
        consumers.push_back(op.id);
      }
    }
  }
  preds_.assign(ops_.size(), {});
  succs_.assign(ops_.size(), {});
  for (const auto& t : tensors_) {
    if (t.producer == kNoOp) continue;
    for (OpId c : t.consumers) {
      if (c == t.producer) continue;
      preds_[static_cast<size_t>(c)].push_back(t.producer);
      succs_[static_cast<size_t>(t.producer)].push_back(c);
    }
  }
  for (auto* lists : {&preds_, &succs_}) {
    for (auto& l : *lists) {
      std::sort(l.begin(), l.end());
      l.erase(std::unique(l.begin(), l.end()), l.end());
    }
  }
}

bool Graph::has_kind(OpKind kind) const {
  return std::any_of(ops_.begin(), ops_.end(),
                     [kind](const OpNode& op) { return op.kind == kind; });
}

bool operator==(const Graph& a, const Graph& b) {
  if (a.ops_.size() != b.ops_.size() || a.tensors_.size() != b.tensors_.size()) return false;
  for (size_t i = 0; i < a.ops_.size(); ++i) {
    const auto& x = a.ops_[i];
    const auto& y = b.ops_[i];
    if (x.name != y.name || x.kind != y.kind || x.inputs != y.inputs ||
        x.outputs != y.outputs || x.key != y.key) {
      return false;
    }
  }
  for (size_t i = 0; i < a.tensors_.size(); ++i) {
    const auto& x = a.tensors_[i];
    const auto& y = b.tensors_[i];
    if (x.size != y.size || x.category != y.category || x.key != y.key) return false;
  }
  return true;
}

TensorId GraphBuilder::add_tensor(Bytes size, std::optional<TensorCategory> category) {
  TensorInfo t;
  t.id = static_cast<TensorId>(tensors_.size());
  t.key = t.id;
  t.size = size;
  t.category = category;
  tensors_.push_back(std::move(t));
  return tensors_.back().id;
}

OpId GraphBuilder::add_op(std::string name, OpKind kind, std::vector<TensorId> inputs,
                          std::vector<TensorId> outputs) {
  OpNode op;
  op.id = static_cast<OpId>(ops_.size());
  op.key = op.id;
  op.name = std::move(name);
  op.kind = kind;
  op.inputs = std::move(inputs);
  op.outputs = std::move(outputs);
  ops_.push_back(std::move(op));
  return ops_.back().id;
}

Graph GraphBuilder::build() const { return Graph(ops_, tensors_); }

namespace {

// Kahn's algorithm; returns fewer than n ops when a cycle exists.
std::vector<OpId> kahn(const Graph& g) {
  const int n = g.num_ops();
  std::vector<int> indegree(static_cast<size_t>(n), 0);
  for (OpId v = 0; v < n; ++v) indegree[static_cast<size_t>(v)] = static_cast<int>(g.preds(v).size());
  std::priority_queue<OpId, std::vector<OpId>, std::greater<>> ready;
  for (OpId v = 0; v < n; ++v) {
    if (indegree[static_cast<size_t>(v)] == 0) ready.push(v);
  }
  std::vector<OpId> order;
  order.reserve(static_cast<size_t>(n));
  while (!ready.empty()) {
    OpId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (OpId s : g.succs(v)) {
      if (--indegree[static_cast<size_t>(s)] == 0) ready.push(s);
    }
  }
  return order;
}

}  // namespace

std::vector<OpId> topological_order(const Graph& g) {
  auto order = kahn(g);
  if (static_cast<int>(order.size()) != g.num_ops()) {
    throw GraphError("graph contains a cycle");
  }
  return order;
}

ValidationReport validate_graph(const Graph& g) {
  ValidationReport report;
  std::vector<int> producer_count(static_cast<size_t>(g.num_tensors()), 0);
  for (const auto& op : g.ops()) {
    for (TensorId t : op.outputs) ++producer_count[static_cast<size_t>(t)];
  }
  for (const auto& t : g.tensors()) {
    const auto count = producer_count[static_cast<size_t>(t.id)];
    if (count > 1) {
      report.violations.push_back({Violation::Kind::kMultipleProducers,
                                   "tensor " + std::to_string(t.key) + " has " +
                                       std::to_string(count) + " producers"});
    } else if (count == 0) {
      report.violations.push_back(
          {Violation::Kind::kNoProducer, "tensor " + std::to_string(t.key) + " has no producer"});
    }
    if (t.size <= 0) {
      report.violations.push_back(
          {Violation::Kind::kZeroSize, "tensor " + std::to_string(t.key) + " has non-positive size"});
    }
  }
  bool self_loop = false;
  for (const auto& t : g.tensors()) {
    if (t.producer != kNoOp &&
        std::find(t.consumers.begin(), t.consumers.end(), t.producer) != t.consumers.end()) {
      self_loop = true;
    }
  }
  if (self_loop || static_cast<int>(kahn(g).size()) != g.num_ops()) {
    report.violations.push_back({Violation::Kind::kCycle, "graph contains a cycle"});
  }
  return report;
}

Reachability::Reachability(const Graph& g) {
  const auto n = static_cast<size_t>(g.num_ops());
  anc_.assign(n, boost::dynamic_bitset<>(n));
  desc_.assign(n, boost::dynamic_bitset<>(n));
  const auto order = topological_order(g);
  for (OpId v : order) {
    auto& a = anc_[static_cast<size_t>(v)];
    for (OpId p : g.preds(v)) {
      a.set(static_cast<size_t>(p));
      a |= anc_[static_cast<size_t>(p)];
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto& d = desc_[static_cast<size_t>(*it)];
    for (OpId s : g.succs(*it)) {
      d.set(static_cast<size_t>(s));
      d |= desc_[static_cast<size_t>(s)];
    }
  }
}

ScheduleBounds asap_alap(const Graph& g) {
  const Reachability reach(g);
  const int n = g.num_ops();
  ScheduleBounds b;
  b.asap.resize(static_cast<size_t>(n));
  b.alap.resize(static_cast<size_t>(n));
  for (OpId v = 0; v < n; ++v) {
    b.asap[static_cast<size_t>(v)] = static_cast<int>(reach.ancestors(v).count());
    b.alap[static_cast<size_t>(v)] = n - 1 - static_cast<int>(reach.descendants(v).count());
  }
  return b;
}

Schedule Schedule::sequential(std::vector<OpId> order) {
  Schedule s;
  s.timestep_of.assign(order.size(), 0);
  for (size_t i = 0; i < order.size(); ++i) {
    const auto v = order[i];
    if (v < 0 || static_cast<size_t>(v) >= order.size()) {
      throw ScheduleError("schedule references unknown op " + std::to_string(v));
    }
    s.timestep_of[static_cast<size_t>(v)] = static_cast<int>(i);
  }
  s.order = std::move(order);
  s.ops_per_step = 1;
  return s;
}

int Schedule::num_steps() const {
  int steps = 0;
  for (int t : timestep_of) steps = std::max(steps, t + 1);
  return steps;
}

void check_schedule(const Graph& g, const Schedule& s) {
  const auto n = static_cast<size_t>(g.num_ops());
  if (s.ops_per_step < 1) throw ScheduleError("ops_per_step must be at least 1");
  if (s.order.size() != n || s.timestep_of.size() != n) {
    throw ScheduleError("schedule covers " + std::to_string(s.order.size()) + " ops, graph has " +
                        std::to_string(n));
  }
  std::vector<bool> seen(n, false);
  int prev_step = -1;
  for (OpId v : s.order) {
    if (v < 0 || static_cast<size_t>(v) >= n || seen[static_cast<size_t>(v)]) {
      throw ScheduleError("schedule lists op " + std::to_string(v) + " twice or out of range");
    }
    seen[static_cast<size_t>(v)] = true;
    const int step = s.timestep_of[static_cast<size_t>(v)];
    if (step < prev_step) throw ScheduleError("order is not sorted by timestep");
    prev_step = step;
  }
  std::vector<int> per_step(n + 1, 0);
  for (size_t v = 0; v < n; ++v) {
    const int step = s.timestep_of[v];
    if (step < 0 || static_cast<size_t>(step) >= n) {
      throw ScheduleError("timestep out of range for op " + std::to_string(v));
    }
    if (++per_step[static_cast<size_t>(step)] > s.ops_per_step) {
      throw ScheduleError("more than ops_per_step ops share timestep " + std::to_string(step));
    }
    for (OpId p : g.preds(static_cast<OpId>(v))) {
      if (s.timestep_of[static_cast<size_t>(p)] >= step) {
        throw ScheduleError("op " + g.op(static_cast<OpId>(v)).name + " runs before its input producer " +
                            g.op(p).name);
      }
    }
  }
}

std::vector<Interval> tensor_lifetimes(const Graph& g, const Schedule& s) {
  const int last = s.num_steps() - 1;
  std::vector<Interval> live(static_cast<size_t>(g.num_tensors()));
  for (const auto& t : g.tensors()) {
    auto& iv = live[static_cast<size_t>(t.id)];
    iv.start = t.producer == kNoOp ? 0 : s.timestep_of[static_cast<size_t>(t.producer)];
    if (t.consumers.empty()) {
      iv.end = last;
    } else {
      iv.end = iv.start;
      for (OpId c : t.consumers) iv.end = std::max(iv.end, s.timestep_of[static_cast<size_t>(c)]);
    }
  }
  return live;
}

std::vector<Bytes> memory_profile(const Graph& g, const Schedule& s) {
  check_schedule(g, s);
  const int steps = s.num_steps();
  std::vector<Bytes> delta(static_cast<size_t>(steps) + 1, 0);
  const auto live = tensor_lifetimes(g, s);
  for (const auto& t : g.tensors()) {
    const auto& iv = live[static_cast<size_t>(t.id)];
    delta[static_cast<size_t>(iv.start)] += t.size;
    delta[static_cast<size_t>(iv.end) + 1] -= t.size;
  }
  std::vector<Bytes> profile(static_cast<size_t>(steps), 0);
  Bytes running = 0;
  for (int t = 0; t < steps; ++t) {
    running += delta[static_cast<size_t>(t)];
    profile[static_cast<size_t>(t)] = running;
  }
  return profile;
}

PeakMemory peak_memory(const Graph& g, const Schedule& s) {
  const auto profile = memory_profile(g, s);
  PeakMemory result;
  for (size_t t = 0; t < profile.size(); ++t) {
    if (profile[t] > result.peak) {
      result.peak = profile[t];
      result.timestep = static_cast<int>(t);
    }
  }
  return result;
}

std::vector<TensorCategory> classify_tensors(const Graph& g) {
  std::vector<TensorCategory> out(static_cast<size_t>(g.num_tensors()),
                                  TensorCategory::kTemporaryBuffer);
  for (const auto& t : g.tensors()) {
    auto& c = out[static_cast<size_t>(t.id)];
    if (t.category) {
      c = *t.category;
      continue;
    }
    if (t.producer == kNoOp) continue;
    const OpKind pk = g.op(t.producer).kind;
    auto consumed_by = [&](OpKind k) {
      return std::any_of(t.consumers.begin(), t.consumers.end(),
                         [&](OpId v) { return g.op(v).kind == k; });
    };
    if (pk == OpKind::kForward && consumed_by(OpKind::kBackward)) {
      c = TensorCategory::kActivation;
    } else if (pk == OpKind::kBackward && consumed_by(OpKind::kWeightUpdate)) {
      c = TensorCategory::kGradient;
    }
  }
  return out;
}

}  // namespace memplan

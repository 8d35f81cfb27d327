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


#include "memplan/weight_update.hpp"

#include <algorithm>

namespace memplan {

WeightUpdateModel::WeightUpdateModel(const Graph& g) : bounds_(asap_alap(g)) {
  const auto categories = classify_tensors(g);
  Bytes total = 0;
  for (const auto& t : g.tensors()) {
    total += t.size;
    if (categories[static_cast<size_t>(t.id)] != TensorCategory::kActivation || t.producer == kNoOp) continue;
    Interval live{bounds_.asap[static_cast<size_t>(t.producer)], bounds_.asap[static_cast<size_t>(t.producer)]};
    if (t.consumers.empty()) live.end = g.num_ops() - 1;
    for (OpId c : t.consumers) live.end = std::max(live.end, bounds_.alap[static_cast<size_t>(c)]);
    activations_.emplace_back(live, t.size);
    esti_pm_ += t.size;
  }
  if (g.num_tensors() > 0) mean_size_ = static_cast<double>(total) / g.num_tensors();
}

Bytes WeightUpdateModel::mem_atvs(int t) const {
  Bytes sum = 0;
  for (const auto& [live, size] : activations_) {
    if (live.start <= t && t <= live.end) sum += size;
  }
  return sum;
}

WeightUpdateCost WeightUpdateModel::cost(int t, Bytes grad_size, double alpha) const {
  WeightUpdateCost c;
  c.esti_pm = esti_pm_;
  c.mem_atvs = mem_atvs(t);
  c.mem_used = static_cast<double>(c.mem_atvs) + alpha * static_cast<double>(grad_size);
  return c;
}

WeightUpdateCost weight_update_cost(const Graph& g, int t, const WeightUpdateBranch& branch, double alpha) {
  return WeightUpdateModel(g).cost(t, branch.grad_size, alpha);
}

std::string optimizer_of(const Graph& g, const WeightUpdateBranch& branch) {
  if (branch.ops.empty()) return {};
  const auto& name = g.op(branch.ops.front()).name;
  const auto slash = name.find('/');
  return slash == std::string::npos ? std::string() : name.substr(0, slash);
}

double alpha_for(const WeightUpdateConfig& cfg, const std::string& optimizer) {
  auto it = cfg.alpha.find(optimizer);
  if (it == cfg.alpha.end()) it = cfg.alpha.find("default");
  if (it == cfg.alpha.end()) {
    throw ConfigError("no alpha for optimizer '" + optimizer + "'; pass --alpha " +
                      (optimizer.empty() ? "default" : optimizer) + "=<value>");
  }
  return it->second;
}

std::vector<int> WeightUpdatePlan::units() const {
  std::vector<int> out;
  for (const auto& b : branches) out.push_back(b.unit);
  return out;
}

namespace {

// Timestep at which a gap unit starts on the asap scale.
int gap_start(const SubgraphTree& tree, const ScheduleBounds& bounds, int unit) {
  if (unit == 0) return 0;
  const OpId boundary = tree.timeline[static_cast<size_t>(unit - 1)].ops.front();
  return bounds.asap[static_cast<size_t>(boundary)] + 1;
}

WeightUpdatePlan uniform_plan(const SubgraphTree& tree, bool at_end) {
  WeightUpdatePlan plan;
  const int last = static_cast<int>(tree.timeline.size()) - 1;
  for (const auto& b : tree.branches) {
    BranchPlacement p;
    p.unit = at_end ? last : b.ready_unit;
    p.delayed = at_end && last != b.ready_unit;
    p.grad_size = b.grad_size;
    plan.branches.push_back(p);
  }
  return plan;
}

}  // namespace

WeightUpdatePlan immediate_weight_updates(const SubgraphTree& tree) { return uniform_plan(tree, false); }
WeightUpdatePlan deferred_weight_updates(const SubgraphTree& tree) { return uniform_plan(tree, true); }

WeightUpdatePlan place_weight_updates(const Graph& g, const SubgraphTree& tree, const WeightUpdateConfig& cfg) {
  WeightUpdatePlan plan;
  if (tree.branches.empty()) return plan;
  const WeightUpdateModel model(g);
  plan.esti_pm = model.esti_pm();
  const auto esti = static_cast<double>(model.esti_pm());
  const int last = static_cast<int>(tree.timeline.size()) - 1;
  for (const auto& b : tree.branches) {
    BranchPlacement p;
    p.grad_size = b.grad_size;
    p.alpha = alpha_for(cfg, optimizer_of(g, b));
    p.unit = b.ready_unit;
    p.ratio = model.mean_tensor_size() > 0 ? static_cast<double>(b.grad_size) / model.mean_tensor_size() : 0.0;
    const OpId producer = b.gradient >= 0 ? g.tensor(b.gradient).producer : kNoOp;
    const int t = producer == kNoOp ? 0 : model.bounds().asap[static_cast<size_t>(producer)];
    p.mem_used = model.cost(t, b.grad_size, p.alpha).mem_used;
    if (p.ratio > cfg.delay_radius && p.mem_used > esti) {
      p.delayed = true;
      p.unit = last;
      for (int u = b.ready_unit + 2; u < last; u += 2) {
        const double used = model.cost(gap_start(tree, model.bounds(), u), b.grad_size, p.alpha).mem_used;
        if (used <= esti) {
          p.unit = u;
          break;
        }
      }
    }
    plan.branches.push_back(p);
  }
  return plan;
}

}  // namespace memplan

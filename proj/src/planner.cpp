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


#include "memplan/planner.hpp"

#include <algorithm>
#include <set>

#include "memplan/simulator.hpp"
#include "parallel.hpp"

namespace memplan {

void PlannerConfig::validate() const {
  if (node_limit < 2) throw ConfigError("node_limit must be at least 2");
  if (layout_limit < 1) throw ConfigError("layout_limit must be at least 1");
  if (ops_per_step < 1) throw ConfigError("ops_per_step must be at least 1");
  if (order_budget.count() <= 0 || layout_budget.count() <= 0) throw ConfigError("time budgets must be positive");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (weight_updates.delay_radius < 0) throw ConfigError("delay radius must be non-negative");
  for (const auto& [name, alpha] : weight_updates.alpha) {
    if (alpha < 0) throw ConfigError("alpha for " + name + " must be non-negative");
  }
}

namespace {

std::vector<int> unit_of_ops(const Graph& g, const SubgraphTree& tree) {
  std::vector<int> unit_of(static_cast<size_t>(g.num_ops()), -1);
  for (int u = 0; u < static_cast<int>(tree.timeline.size()); ++u) {
    for (OpId v : tree.unit_ops(u)) unit_of[static_cast<size_t>(v)] = u;
  }
  return unit_of;
}

OrderingSolution solve_unit(const Graph& g, const SubgraphTree& tree, int unit, const std::vector<int>& unit_of,
                            const PlannerConfig& cfg) {
  const auto ops = tree.unit_ops(unit);
  if (ops.empty()) {
    OrderingSolution empty;
    empty.optimal = true;
    return empty;
  }
  std::vector<bool> done(unit_of.size());
  for (size_t v = 0; v < unit_of.size(); ++v) done[v] = unit_of[v] < unit;
  auto p = make_ordering_problem(g, ops, done);
  p.ops_per_step = cfg.ops_per_step;
  p.budget = cfg.order_budget;
  if (p.size() <= std::min(cfg.node_limit, 64)) return exact_order(p);
  return greedy_order(p);
}

struct Candidate {
  std::string policy;
  WeightUpdatePlan updates;
};

std::vector<Candidate> weight_update_candidates(const Graph& g, const SubgraphTree& tree, const PlannerConfig& cfg) {
  if (tree.branches.empty()) return {{"none", {}}};
  std::vector<Candidate> out{{"heuristic", place_weight_updates(g, tree, cfg.weight_updates)},
                             {"immediate", immediate_weight_updates(tree)},
                             {"deferred", deferred_weight_updates(tree)}};
  std::vector<Candidate> unique;
  for (auto& c : out) {
    const bool seen = std::any_of(unique.begin(), unique.end(),
                                  [&](const Candidate& u) { return u.updates.units() == c.updates.units(); });
    if (!seen) unique.push_back(std::move(c));
  }
  return unique;
}

// Splits items into groups that never overlap in time with each other.
std::vector<std::vector<LayoutItem>> time_components(std::vector<LayoutItem> items) {
  std::sort(items.begin(), items.end(), [](const LayoutItem& a, const LayoutItem& b) {
    return a.live.start != b.live.start ? a.live.start < b.live.start : a.id < b.id;
  });
  std::vector<std::vector<LayoutItem>> out;
  int reach = -1;
  for (auto& it : items) {
    if (out.empty() || it.live.start > reach) out.emplace_back();
    reach = std::max(reach, it.live.end);
    out.back().push_back(it);
  }
  return out;
}

LayoutPart solve_leaf_layout(std::vector<LayoutItem> items, bool training, const PlannerConfig& cfg,
                             LeafStats& stats) {
  std::vector<LayoutItem> acts;
  std::vector<LayoutItem> others;
  for (const auto& it : items) (it.activation ? acts : others).push_back(it);
  auto components = time_components(others);
  if (components.empty()) components.emplace_back();

  LayoutPart part;
  part.items = std::move(items);
  for (const auto& comp : components) {
    LayoutProblem p;
    p.items = acts;
    p.items.insert(p.items.end(), comp.begin(), comp.end());
    p.activations_at_bottom = training;
    p.budget = cfg.layout_budget;
    MemoryLayout m;
    if (static_cast<int>(comp.size()) <= cfg.layout_limit) {
      const auto sol = exact_layout(p);
      m = sol.layout;
      stats.layout_optimal = stats.layout_optimal && sol.optimal;
      stats.layout_nodes += sol.nodes;
      stats.layout_seconds += sol.seconds;
    } else {
      m = llfb_layout(p);
      stats.layout_optimal = false;
    }
    for (const auto& [id, off] : m.offsets) part.layout.offsets[id] = off;
    part.layout.capacity = std::max(part.layout.capacity, m.capacity);
    part.layout.activation_block_size = m.activation_block_size;
  }
  return part;
}

}  // namespace

std::vector<OrderingSolution> solve_units(const Graph& g, const SubgraphTree& tree, const PlannerConfig& cfg) {
  const auto unit_of = unit_of_ops(g, tree);
  std::vector<OrderingSolution> out(tree.timeline.size());
  detail::parallel_for(tree.leaves.size(), cfg.workers, [&](size_t i) {
    for (int u : tree.nodes[static_cast<size_t>(tree.leaves[i])].units) {
      out[static_cast<size_t>(u)] = solve_unit(g, tree, u, unit_of, cfg);
    }
  });
  return out;
}

AssembledOrder assemble_order(const Graph& g, const SubgraphTree& tree, const std::vector<OrderingSolution>& units,
                              int ops_per_step) {
  if (units.size() != tree.timeline.size()) throw InvariantError("one solution per timeline unit required");
  AssembledOrder out;
  auto& s = out.schedule;
  s.ops_per_step = ops_per_step;
  s.timestep_of.assign(static_cast<size_t>(g.num_ops()), -1);
  int step = 0;
  for (const auto& sol : units) {
    size_t pos = 0;
    for (const auto& group : sol.steps) {
      for (size_t k = 0; k < group.size(); ++k, ++pos) {
        if (pos >= sol.order.size()) throw InvariantError("unit solution steps and order disagree");
        const OpId v = sol.order[pos];
        s.order.push_back(v);
        s.timestep_of[static_cast<size_t>(v)] = step;
      }
      ++step;
    }
    out.peak = std::max(out.peak, sol.peak);
  }
  if (static_cast<int>(s.order.size()) != g.num_ops()) throw InvariantError("assembled order misses ops");
  try {
    check_schedule(g, s);
  } catch (const ScheduleError& e) {
    throw InvariantError(std::string("assembled order is invalid: ") + e.what());
  }
  const Bytes evaluated = peak_memory(g, s).peak;
  if (evaluated != out.peak) {
    throw InvariantError("assembled peak " + std::to_string(evaluated) + " differs from unit peaks " +
                         std::to_string(out.peak));
  }
  return out;
}

PlanStats recompute_stats(const Graph& g, const Schedule& s, const MemoryLayout& m) {
  PlanStats st;
  st.theoretical_peak = peak_memory(g, s).peak;
  st.capacity = m.capacity;
  st.fragmentation_pct = fragmentation_pct(st.capacity, st.theoretical_peak);
  return st;
}

ExecutionPlan plan(const Graph& g, const PlannerConfig& cfg) {
  cfg.validate();
  const auto report = validate_graph(g);
  if (!report.ok()) {
    std::string msg = "invalid graph:";
    for (const auto& v : report.violations) msg += " " + v.message + ";";
    throw GraphError(msg);
  }
  ExecutionPlan out;
  if (g.empty()) {
    out.weight_update_policy = "none";
    return out;
  }

  const bool training = g.has_kind(OpKind::kBackward);
  const SubgraphTree base = training ? build_subgraph_tree(g, cfg.node_limit) : build_segment_tree(g, cfg.node_limit);

  // Try the heuristic placement against both fixed policies; keep the
  // lowest peak, preferring earlier candidates on ties.
  SubgraphTree tree;
  std::vector<OrderingSolution> solutions;
  AssembledOrder order;
  bool have = false;
  for (const auto& c : weight_update_candidates(g, base, cfg)) {
    SubgraphTree t = base;
    if (!t.branches.empty()) assign_branch_units(t, c.updates.units());
    auto sols = solve_units(g, t, cfg);
    auto assembled = assemble_order(g, t, sols, cfg.ops_per_step);
    if (!have || assembled.peak < order.peak) {
      have = true;
      tree = std::move(t);
      solutions = std::move(sols);
      order = std::move(assembled);
      out.weight_updates = c.updates;
      out.weight_update_policy = c.policy;
    }
  }

  assign_shared_tensors(tree, g);
  const auto items = layout_items(g, order.schedule);
  const auto categories = classify_tensors(g);

  out.leaves.resize(tree.leaves.size());
  std::vector<LayoutPart> parts(tree.leaves.size());
  detail::parallel_for(tree.leaves.size(), cfg.workers, [&](size_t i) {
    const int id = tree.leaves[i];
    const auto& node = tree.nodes[static_cast<size_t>(id)];
    auto& st = out.leaves[i];
    st.node = id;
    st.ops = static_cast<int>(node.ops.size());
    for (int u : node.units) {
      const auto& sol = solutions[static_cast<size_t>(u)];
      st.order_peak = std::max(st.order_peak, sol.peak);
      st.order_optimal = st.order_optimal && sol.optimal;
      st.order_nodes += sol.nodes;
      st.order_seconds += sol.seconds;
    }
    std::vector<LayoutItem> mine;
    for (TensorId t : node.owned_tensors) {
      auto it = items[static_cast<size_t>(t)];
      it.activation = training && categories[static_cast<size_t>(t)] == TensorCategory::kActivation;
      mine.push_back(it);
    }
    st.items = static_cast<int>(mine.size());
    parts[i] = solve_leaf_layout(std::move(mine), training, cfg, st);
  });

  LayoutProblem whole;
  whole.items = items;
  for (auto& it : whole.items) {
    it.activation = training && categories[static_cast<size_t>(it.id)] == TensorCategory::kActivation;
  }
  out.layout = compact_layout(repair_conflicts(concat_layouts(parts), whole), whole);
  // Seams between leaf layouts can cost a few slots; a whole-graph long-lived
  // first layout is cheap and replaces the stacked one when strictly smaller.
  if (out.layout.capacity > clique_bound(whole.items)) {
    LayoutProblem flat = whole;
    flat.activations_at_bottom = training;
    auto alt = compact_layout(llfb_layout(flat), whole);
    if (alt.capacity < out.layout.capacity) out.layout = std::move(alt);
  }
  if (const auto v = validate_layout(whole.items, out.layout); !v.empty()) {
    throw InvariantError("planned layout is invalid: " + v.front().message);
  }
  out.schedule = std::move(order.schedule);
  out.stats = recompute_stats(g, out.schedule, out.layout);
  out.stats.total_leaves = static_cast<int>(out.leaves.size());
  for (const auto& st : out.leaves) out.stats.optimal_leaves += st.order_optimal && st.layout_optimal;
  return out;
}

namespace {

const std::set<std::string> kOrderBaselines{"definition-order", "greedy-order"};
const std::set<std::string> kLayoutBaselines{"llfb-layout", "caching-allocator"};

double reduction(Bytes baseline, Bytes planned) {
  return baseline == 0 ? 0.0 : 100.0 * static_cast<double>(baseline - planned) / static_cast<double>(baseline);
}

}  // namespace

Comparison compare_baselines(const Graph& g, const PlannerConfig& cfg, const std::vector<std::string>& baselines) {
  std::vector<std::string> orders;
  std::vector<std::string> layouts;
  for (const auto& name : baselines) {
    if (kOrderBaselines.count(name)) {
      if (std::find(orders.begin(), orders.end(), name) == orders.end()) orders.push_back(name);
    } else if (kLayoutBaselines.count(name)) {
      if (std::find(layouts.begin(), layouts.end(), name) == layouts.end()) layouts.push_back(name);
    } else {
      throw ConfigError("unknown baseline: " + name);
    }
  }
  if (baselines.empty()) {
    orders.assign(kOrderBaselines.begin(), kOrderBaselines.end());
    layouts.assign(kLayoutBaselines.begin(), kLayoutBaselines.end());
  }
  if (orders.empty()) orders = {"definition-order"};
  if (layouts.empty()) layouts = {"llfb-layout"};

  Comparison out;
  const auto planned = plan(g, cfg);
  out.planner = {"planner", "planner", planned.stats.theoretical_peak, planned.stats.capacity,
                 planned.stats.fragmentation_pct, 0.0, 0.0};
  for (const auto& o : orders) {
    Schedule s;
    if (o == "definition-order") {
      s = Schedule::sequential(topological_order(g));
    } else {
      auto p = make_ordering_problem(g);
      p.ops_per_step = cfg.ops_per_step;
      s = to_schedule(p, greedy_order(p));
    }
    const Bytes tp = peak_memory(g, s).peak;
    for (const auto& l : layouts) {
      BaselineRow row;
      row.order = o;
      row.layout = l;
      row.theoretical_peak = tp;
      if (l == "llfb-layout") {
        LayoutProblem p;
        p.items = layout_items(g, s);
        row.capacity = llfb_layout(p).capacity;
      } else {
        row.capacity = replay_dynamic(g, s).actual_peak;
      }
      row.fragmentation_pct = fragmentation_pct(row.capacity, row.theoretical_peak);
      row.tp_reduction_pct = reduction(row.theoretical_peak, planned.stats.theoretical_peak);
      row.capacity_reduction_pct = reduction(row.capacity, planned.stats.capacity);
      out.rows.push_back(row);
    }
  }
  return out;
}

}  // namespace memplan

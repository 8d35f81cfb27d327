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

#include "memplan/segmentation.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace memplan {

namespace {

std::vector<bool> all_ops(const Graph& g) { return std::vector<bool>(static_cast<size_t>(g.num_ops()), true); }

boost::dynamic_bitset<> to_bits(const std::vector<bool>& mask) {
  boost::dynamic_bitset<> bits(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) bits.set(i);
  }
  return bits;
}

// Memory-insensitive ops sorted by their forced position, plus the position
// (count of boundary ancestors) of every other considered op.
struct Boundaries {
  std::vector<OpId> mi;           // in execution order
  std::vector<int> gap_of;        // per op: gap index, -1 for boundaries/ignored
  std::vector<int> boundary_of;   // per op: index into mi, -1 otherwise
};

Boundaries find_boundaries(const Graph& g, const std::vector<bool>& considered) {
  const Reachability reach(g);
  const auto bits = to_bits(considered);
  const auto total = bits.count();
  Boundaries b;
  b.gap_of.assign(static_cast<size_t>(g.num_ops()), -1);
  b.boundary_of.assign(static_cast<size_t>(g.num_ops()), -1);
  std::vector<std::pair<size_t, OpId>> mi;
  for (OpId v = 0; v < g.num_ops(); ++v) {
    if (!considered[static_cast<size_t>(v)]) continue;
    const auto before = (reach.ancestors(v) & bits).count();
    const auto after = (reach.descendants(v) & bits).count();
    if (before + after + 1 == total) mi.emplace_back(before, v);
  }
  std::sort(mi.begin(), mi.end());
  boost::dynamic_bitset<> mi_bits(static_cast<size_t>(g.num_ops()));
  for (size_t k = 0; k < mi.size(); ++k) {
    b.mi.push_back(mi[k].second);
    b.boundary_of[static_cast<size_t>(mi[k].second)] = static_cast<int>(k);
    mi_bits.set(static_cast<size_t>(mi[k].second));
  }
  for (OpId v = 0; v < g.num_ops(); ++v) {
    if (!considered[static_cast<size_t>(v)] || b.boundary_of[static_cast<size_t>(v)] >= 0) continue;
    b.gap_of[static_cast<size_t>(v)] = static_cast<int>((reach.ancestors(v) & mi_bits).count());
  }
  return b;
}

std::vector<TimeUnit> make_timeline(const Graph& g, const Boundaries& b) {
  std::vector<TimeUnit> units(2 * b.mi.size() + 1);
  for (size_t k = 0; k < b.mi.size(); ++k) {
    units[2 * k + 1].boundary = true;
    units[2 * k + 1].ops = {b.mi[k]};
  }
  for (OpId v = 0; v < g.num_ops(); ++v) {
    const int gap = b.gap_of[static_cast<size_t>(v)];
    if (gap >= 0) units[2 * static_cast<size_t>(gap)].ops.push_back(v);
  }
  return units;
}

int count_ops(const std::vector<TimeUnit>& timeline, const std::vector<int>& units) {
  int n = 0;
  for (int u : units) n += static_cast<int>(timeline[static_cast<size_t>(u)].ops.size());
  return n;
}

std::vector<int> range(int lo, int hi) {
  std::vector<int> r;
  for (int u = lo; u < hi; ++u) r.push_back(u);
  return r;
}

int add_node(SubgraphTree& tree, int parent, SubgraphKind kind, std::vector<int> units) {
  SubgraphNode node;
  node.kind = kind;
  node.units = std::move(units);
  tree.nodes.push_back(std::move(node));
  const int id = static_cast<int>(tree.nodes.size()) - 1;
  tree.nodes[static_cast<size_t>(parent)].children.push_back(id);
  return id;
}

// Splits an oversized independent subgraph into dependent subgraphs along
// the memory-insensitive ops it contains. Returns child ids, outer first.
std::vector<int> split_dependent(SubgraphTree& tree, const Graph& g, int parent, int node_limit) {
  const auto units = tree.nodes[static_cast<size_t>(parent)].units;
  const auto& timeline = tree.timeline;
  // Pieces start at a boundary unit and run up to the next one.
  std::vector<std::vector<int>> pieces;
  for (int u : units) {
    if (timeline[static_cast<size_t>(u)].boundary || pieces.empty() || pieces.back().back() != u - 1) {
      pieces.push_back({u});
    } else {
      pieces.back().push_back(u);
    }
  }
  auto is_backward = [&](const std::vector<int>& piece) {
    int fwd = 0;
    int bwd = 0;
    for (int u : piece) {
      for (OpId v : timeline[static_cast<size_t>(u)].ops) {
        (g.op(v).kind == OpKind::kBackward ? bwd : fwd)++;
      }
    }
    return bwd > fwd;
  };
  std::vector<std::vector<int>> fwd;
  std::vector<std::vector<int>> bwd;
  for (auto& piece : pieces) (is_backward(piece) ? bwd : fwd).push_back(std::move(piece));
  std::reverse(bwd.begin(), bwd.end());

  std::vector<std::vector<int>> groups;
  std::vector<int> current;
  auto flush = [&] {
    if (!current.empty()) groups.push_back(std::move(current));
    current.clear();
  };
  const size_t pairs = std::max(fwd.size(), bwd.size());
  for (size_t k = 0; k < pairs; ++k) {
    std::vector<int> pair;
    if (k < fwd.size()) pair.insert(pair.end(), fwd[k].begin(), fwd[k].end());
    if (k < bwd.size()) pair.insert(pair.end(), bwd[k].begin(), bwd[k].end());
    std::vector<int> merged = current;
    merged.insert(merged.end(), pair.begin(), pair.end());
    if (count_ops(timeline, merged) <= node_limit) {
      current = std::move(merged);
      continue;
    }
    flush();
    if (count_ops(timeline, pair) <= node_limit) {
      current = std::move(pair);
    } else {
      if (k < fwd.size()) groups.push_back(fwd[k]);
      if (k < bwd.size()) groups.push_back(bwd[k]);
    }
  }
  flush();

  std::vector<int> children;
  for (auto& group : groups) {
    std::sort(group.begin(), group.end());
    const bool oversized = count_ops(timeline, group) > node_limit;
    const int child = add_node(tree, parent, SubgraphKind::kDependent, std::move(group));
    auto& node = tree.nodes[static_cast<size_t>(child)];
    node.unsplittable = oversized;
    for (int u : node.units) {
      if (!timeline[static_cast<size_t>(u)].boundary) continue;
      const OpId v = timeline[static_cast<size_t>(u)].ops.front();
      if (g.op(v).kind == OpKind::kBackward) {
        if (node.inner_bwd == kNoOp) node.inner_bwd = v;
        node.outer_bwd = v;
      } else {
        if (node.outer_fwd == kNoOp) node.outer_fwd = v;
        node.inner_fwd = v;
      }
    }
    children.push_back(child);
  }
  return children;
}

// Adds a subgraph over `units` under the root and records its leaves.
void add_subgraph(SubgraphTree& tree, const Graph& g, std::vector<int> units, int node_limit,
                  std::vector<std::vector<int>>& leaf_groups) {
  const int id = add_node(tree, 0, SubgraphKind::kIndependent, std::move(units));
  const bool oversized = count_ops(tree.timeline, tree.nodes[static_cast<size_t>(id)].units) > node_limit;
  std::vector<int> leaves;
  if (oversized) {
    leaves = split_dependent(tree, g, id, node_limit);
    if (leaves.size() <= 1) {
      // No interior boundary to split along.
      tree.nodes.resize(tree.nodes.size() - leaves.size());
      tree.nodes[static_cast<size_t>(id)].children.clear();
      tree.nodes[static_cast<size_t>(id)].unsplittable = true;
      leaves = {id};
    }
  } else {
    leaves = {id};
  }
  leaf_groups.push_back(std::move(leaves));
}

void refresh_membership(SubgraphTree& tree) {
  for (auto& unit : tree.timeline) unit.leaf = -1;
  for (size_t n = 0; n < tree.nodes.size(); ++n) {
    const auto& node = tree.nodes[n];
    if (!node.is_leaf()) continue;
    for (int u : node.units) tree.timeline[static_cast<size_t>(u)].leaf = static_cast<int>(n);
  }
  // Children are created after their parent, so a reverse sweep sees every
  // child's ops before the parent gathers them.
  for (size_t n = tree.nodes.size(); n-- > 0;) {
    auto& node = tree.nodes[n];
    node.ops.clear();
    if (node.is_leaf()) {
      for (int u : node.units) {
        const auto ops = tree.unit_ops(u);
        node.ops.insert(node.ops.end(), ops.begin(), ops.end());
      }
    } else {
      for (int c : node.children) {
        const auto& child = tree.nodes[static_cast<size_t>(c)].ops;
        node.ops.insert(node.ops.end(), child.begin(), child.end());
      }
    }
    std::sort(node.ops.begin(), node.ops.end());
  }
}

std::vector<WeightUpdateBranch> find_branches(const Graph& g, const Boundaries& b) {
  const auto n = static_cast<size_t>(g.num_ops());
  std::vector<OpId> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](OpId v) {
    while (parent[static_cast<size_t>(v)] != v) {
      parent[static_cast<size_t>(v)] = parent[static_cast<size_t>(parent[static_cast<size_t>(v)])];
      v = parent[static_cast<size_t>(v)];
    }
    return v;
  };
  auto is_update = [&](OpId v) { return g.op(v).kind == OpKind::kWeightUpdate; };
  for (const auto& t : g.tensors()) {
    if (t.producer == kNoOp || !is_update(t.producer)) continue;
    for (OpId c : t.consumers) {
      if (!is_update(c)) {
        throw StructureError("weight-update op " + g.op(t.producer).name + " feeds non-update op " +
                             g.op(c).name);
      }
      const OpId a = find(t.producer);
      const OpId z = find(c);
      if (a != z) parent[static_cast<size_t>(std::max(a, z))] = std::min(a, z);
    }
  }
  std::map<OpId, WeightUpdateBranch> by_root;
  for (OpId v = 0; v < g.num_ops(); ++v) {
    if (is_update(v)) by_root[find(v)].ops.push_back(v);
  }
  std::vector<WeightUpdateBranch> out;
  for (auto& [root, branch] : by_root) {
    int ready = 0;
    int latest = -1;
    std::set<TensorId> external;
    for (OpId v : branch.ops) {
      for (TensorId t : g.op(v).inputs) {
        const OpId p = g.tensor(t).producer;
        if (p == kNoOp || is_update(p) || !external.insert(t).second) continue;
        branch.grad_size += g.tensor(t).size;
        const int unit = b.boundary_of[static_cast<size_t>(p)] >= 0
                             ? 2 * b.boundary_of[static_cast<size_t>(p)] + 2
                             : 2 * b.gap_of[static_cast<size_t>(p)];
        ready = std::max(ready, unit);
        if (unit > latest || (unit == latest && t > branch.gradient)) {
          latest = unit;
          branch.gradient = t;
        }
      }
    }
    branch.ready_unit = ready;
    out.push_back(std::move(branch));
  }
  return out;
}

}  // namespace

std::vector<OpId> SubgraphTree::unit_ops(int unit) const {
  std::vector<OpId> ops = timeline[static_cast<size_t>(unit)].ops;
  for (size_t i = 0; i < branches.size(); ++i) {
    if (branch_unit[i] == unit) ops.insert(ops.end(), branches[i].ops.begin(), branches[i].ops.end());
  }
  std::sort(ops.begin(), ops.end());
  return ops;
}

std::vector<OpId> find_memory_insensitive(const Graph& g, const std::vector<bool>& considered) {
  const auto mask = considered.empty() ? all_ops(g) : considered;
  auto mi = find_boundaries(g, mask).mi;
  std::sort(mi.begin(), mi.end());
  return mi;
}

std::vector<Segment> independent_segments(const Graph& g, const std::vector<bool>& considered) {
  const auto mask = considered.empty() ? all_ops(g) : considered;
  const auto b = find_boundaries(g, mask);
  const auto timeline = make_timeline(g, b);
  std::vector<Segment> out;
  for (size_t k = 0; k <= b.mi.size(); ++k) {
    Segment s;
    s.lo = k == 0 ? kNoOp : b.mi[k - 1];
    s.hi = k == b.mi.size() ? kNoOp : b.mi[k];
    s.members = timeline[2 * k].ops;
    out.push_back(std::move(s));
  }
  return out;
}

SubgraphTree build_segment_tree(const Graph& g, int node_limit) {
  if (node_limit < 2) throw ConfigError("node_limit must be at least 2");
  SubgraphTree tree;
  tree.training = false;
  const auto b = find_boundaries(g, all_ops(g));
  tree.timeline = make_timeline(g, b);
  tree.nodes.push_back({});
  tree.nodes[0].units = range(0, static_cast<int>(tree.timeline.size()));
  std::vector<int> current;
  auto flush = [&] {
    if (current.empty()) return;
    const bool oversized = count_ops(tree.timeline, current) > node_limit;
    const int id = add_node(tree, 0, SubgraphKind::kIndependent, std::move(current));
    tree.nodes[static_cast<size_t>(id)].unsplittable = oversized;
    tree.leaves.push_back(id);
    current.clear();
  };
  for (int u = 0; u < static_cast<int>(tree.timeline.size()); ++u) {
    auto next = current;
    next.push_back(u);
    if (!current.empty() && count_ops(tree.timeline, next) > node_limit) flush();
    current.push_back(u);
  }
  flush();
  tree.first_backward_unit = static_cast<int>(tree.timeline.size());
  refresh_membership(tree);
  return tree;
}

SubgraphTree build_subgraph_tree(const Graph& g, int node_limit) {
  if (node_limit < 2) throw ConfigError("node_limit must be at least 2");
  if (!g.has_kind(OpKind::kBackward)) {
    throw StructureError("graph has no backward ops; cannot build a training decomposition");
  }
  std::vector<bool> core(static_cast<size_t>(g.num_ops()));
  for (const auto& op : g.ops()) core[static_cast<size_t>(op.id)] = op.kind != OpKind::kWeightUpdate;

  SubgraphTree tree;
  tree.training = true;
  const auto b = find_boundaries(g, core);
  tree.timeline = make_timeline(g, b);
  tree.branches = find_branches(g, b);
  tree.branch_unit.resize(tree.branches.size());
  for (size_t i = 0; i < tree.branches.size(); ++i) tree.branch_unit[i] = tree.branches[i].ready_unit;
  const int n_units = static_cast<int>(tree.timeline.size());
  tree.nodes.push_back({});
  tree.nodes[0].units = range(0, n_units);

  const auto categories = classify_tensors(g);
  std::vector<int> unit_of(static_cast<size_t>(g.num_ops()), -1);
  for (int u = 0; u < n_units; ++u) {
    for (OpId v : tree.timeline[static_cast<size_t>(u)].ops) unit_of[static_cast<size_t>(v)] = u;
  }
  auto position = [](int boundary_index) { return 2 * boundary_index + 1; };

  std::vector<int> fwd;
  std::vector<int> bwd;
  for (size_t k = 0; k < b.mi.size(); ++k) {
    const auto kind = g.op(b.mi[k]).kind;
    if (kind == OpKind::kForward) fwd.push_back(static_cast<int>(k));
    if (kind == OpKind::kBackward) bwd.push_back(static_cast<int>(k));
  }
  tree.first_backward_unit = bwd.empty() ? n_units : position(bwd.front());
  for (OpId v = 0; v < g.num_ops(); ++v) {
    if (core[static_cast<size_t>(v)] && g.op(v).kind == OpKind::kBackward) {
      tree.first_backward_unit = std::min(tree.first_backward_unit, unit_of[static_cast<size_t>(v)]);
    }
  }

  // Every activation produced inside the candidate is consumed by backward
  // ops inside it as well.
  auto forms_independent = [&](const std::vector<int>& units) {
    std::vector<bool> inside(static_cast<size_t>(n_units), false);
    for (int u : units) inside[static_cast<size_t>(u)] = true;
    for (int u : units) {
      for (OpId v : tree.timeline[static_cast<size_t>(u)].ops) {
        for (TensorId t : g.op(v).outputs) {
          if (categories[static_cast<size_t>(t)] != TensorCategory::kActivation) continue;
          for (OpId c : g.tensor(t).consumers) {
            if (g.op(c).kind != OpKind::kBackward) continue;
            if (!inside[static_cast<size_t>(unit_of[static_cast<size_t>(c)])]) return false;
          }
        }
      }
    }
    return true;
  };

  std::vector<std::vector<int>> leaf_groups;
  std::vector<int> independent;
  int inner_f = -1;
  int inner_b = -1;
  int outer_f = static_cast<int>(fwd.size()) - 1;
  int outer_b = 0;
  while (outer_f >= 0 && outer_b < static_cast<int>(bwd.size())) {
    const int fpos = position(fwd[static_cast<size_t>(outer_f)]);
    const int bpos = position(bwd[static_cast<size_t>(outer_b)]);
    if (fpos >= bpos) break;
    std::vector<int> units;
    if (inner_f < 0) {
      units = range(fpos, bpos);
    } else {
      units = range(fpos, position(fwd[static_cast<size_t>(inner_f)]));
      const auto back = range(position(bwd[static_cast<size_t>(inner_b)]), bpos);
      units.insert(units.end(), back.begin(), back.end());
    }
    if (forms_independent(units)) {
      add_subgraph(tree, g, std::move(units), node_limit, leaf_groups);
      auto& node = tree.nodes[static_cast<size_t>(tree.nodes[0].children.back())];
      node.outer_fwd = b.mi[static_cast<size_t>(fwd[static_cast<size_t>(outer_f)])];
      node.outer_bwd = b.mi[static_cast<size_t>(bwd[static_cast<size_t>(outer_b)])];
      if (inner_f >= 0) {
        node.inner_fwd = b.mi[static_cast<size_t>(fwd[static_cast<size_t>(inner_f)])];
        node.inner_bwd = b.mi[static_cast<size_t>(bwd[static_cast<size_t>(inner_b)])];
      }
      inner_f = outer_f;
      inner_b = outer_b;
    }
    --outer_f;
    ++outer_b;
  }

  // Whatever lies outside the last independent subgraph.
  std::vector<int> rest;
  if (inner_f < 0) {
    rest = range(0, n_units);
  } else {
    rest = range(0, position(fwd[static_cast<size_t>(inner_f)]));
    const auto back = range(position(bwd[static_cast<size_t>(inner_b)]), n_units);
    rest.insert(rest.end(), back.begin(), back.end());
  }
  std::vector<std::vector<int>> rest_group;
  add_subgraph(tree, g, std::move(rest), node_limit, rest_group);
  {
    auto& node = tree.nodes[static_cast<size_t>(tree.nodes[0].children.back())];
    if (inner_f >= 0) {
      node.inner_fwd = b.mi[static_cast<size_t>(fwd[static_cast<size_t>(inner_f)])];
      node.inner_bwd = b.mi[static_cast<size_t>(bwd[static_cast<size_t>(inner_b)])];
    }
  }

  // Stack: the enclosing remainder first, then outermost to innermost.
  tree.leaves = rest_group.front();
  for (auto it = leaf_groups.rbegin(); it != leaf_groups.rend(); ++it) {
    tree.leaves.insert(tree.leaves.end(), it->begin(), it->end());
  }
  refresh_membership(tree);
  return tree;
}

void assign_branch_units(SubgraphTree& tree, const std::vector<int>& units) {
  if (units.size() != tree.branches.size()) throw ConfigError("one unit per branch required");
  for (size_t i = 0; i < units.size(); ++i) {
    const int u = units[i];
    if (u < tree.branches[i].ready_unit || u >= static_cast<int>(tree.timeline.size()) ||
        tree.timeline[static_cast<size_t>(u)].boundary) {
      throw ConfigError("weight-update branch placed before its gradient or on a boundary");
    }
  }
  tree.branch_unit = units;
  refresh_membership(tree);
}

std::optional<SharedTensorType> classify_shared_tensor(const Graph& g, TensorId t, const SubgraphNode& node,
                                                       OpId last) {
  auto inside = [&](OpId v) {
    return v != kNoOp && std::binary_search(node.ops.begin(), node.ops.end(), v);
  };
  const bool created_in = inside(g.tensor(t).producer);
  const bool freed_in = inside(last);
  if (created_in && freed_in) return std::nullopt;
  if (created_in) return SharedTensorType::kCIFO;
  if (freed_in) return SharedTensorType::kCOFI;
  return SharedTensorType::kCOFO;
}

OpId last_consumer(const SubgraphTree& tree, const Graph& g, TensorId t) {
  std::vector<int> unit_of(static_cast<size_t>(g.num_ops()), -1);
  for (int u = 0; u < static_cast<int>(tree.timeline.size()); ++u) {
    for (OpId v : tree.unit_ops(u)) unit_of[static_cast<size_t>(v)] = u;
  }
  OpId best = kNoOp;
  for (OpId c : g.tensor(t).consumers) {
    if (best == kNoOp || unit_of[static_cast<size_t>(c)] > unit_of[static_cast<size_t>(best)] ||
        (unit_of[static_cast<size_t>(c)] == unit_of[static_cast<size_t>(best)] && c > best)) {
      best = c;
    }
  }
  return best;
}

std::vector<int> assign_shared_tensors(SubgraphTree& tree, const Graph& g) {
  std::vector<int> unit_of(static_cast<size_t>(g.num_ops()), -1);
  for (int u = 0; u < static_cast<int>(tree.timeline.size()); ++u) {
    for (OpId v : tree.unit_ops(u)) unit_of[static_cast<size_t>(v)] = u;
  }
  auto leaf_of = [&](OpId v) {
    const int u = unit_of[static_cast<size_t>(v)];
    if (u < 0) throw StructureError("op " + g.op(v).name + " belongs to no leaf");
    return tree.timeline[static_cast<size_t>(u)].leaf;
  };
  const auto categories = classify_tensors(g);
  std::vector<int> owner(static_cast<size_t>(g.num_tensors()), -1);
  for (auto& node : tree.nodes) node.owned_tensors.clear();
  for (const auto& t : g.tensors()) {
    if (t.producer == kNoOp) throw StructureError("tensor " + std::to_string(t.key) + " has no producer");
    const int created = leaf_of(t.producer);
    OpId last = kNoOp;
    for (OpId c : t.consumers) {
      if (last == kNoOp || unit_of[static_cast<size_t>(c)] > unit_of[static_cast<size_t>(last)] ||
          (unit_of[static_cast<size_t>(c)] == unit_of[static_cast<size_t>(last)] && c > last)) {
        last = c;
      }
    }
    int chosen = created;
    if (last != kNoOp) {
      const int freed = leaf_of(last);
      if (freed != created) {
        // Shared: CIFO in `created`, COFI in `freed`.
        switch (categories[static_cast<size_t>(t.id)]) {
          case TensorCategory::kActivation:
            chosen = freed;
            break;
          case TensorCategory::kTemporaryBuffer: {
            const auto producer_kind = g.op(t.producer).kind;
            const bool freed_in_forward = g.op(last).kind == OpKind::kForward;
            const bool created_in_backward =
                producer_kind == OpKind::kBackward || producer_kind == OpKind::kWeightUpdate;
            chosen = freed_in_forward || !created_in_backward ? freed : created;
            break;
          }
          default:
            chosen = created;
            break;
        }
      }
    }
    owner[static_cast<size_t>(t.id)] = chosen;
    tree.nodes[static_cast<size_t>(chosen)].owned_tensors.push_back(t.id);
  }
  return owner;
}

}  // namespace memplan

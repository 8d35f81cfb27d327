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

#include "memplan/ordering.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace memplan {

using Clock = std::chrono::steady_clock;

OrderingProblem make_ordering_problem(const Graph& g, std::span<const OpId> ops,
                                      const std::vector<bool>& done) {
  OrderingProblem p;
  p.ops.assign(ops.begin(), ops.end());
  std::vector<int> local(static_cast<size_t>(g.num_ops()), -1);
  for (size_t i = 0; i < p.ops.size(); ++i) {
    const OpId v = p.ops[i];
    if (done[static_cast<size_t>(v)] || local[static_cast<size_t>(v)] != -1) {
      throw ScheduleError("op " + g.op(v).name + " listed twice in ordering problem");
    }
    local[static_cast<size_t>(v)] = static_cast<int>(i);
  }
  p.preds.resize(p.ops.size());
  for (size_t i = 0; i < p.ops.size(); ++i) {
    for (OpId q : g.preds(p.ops[i])) {
      if (local[static_cast<size_t>(q)] >= 0) {
        p.preds[i].push_back(local[static_cast<size_t>(q)]);
      } else if (!done[static_cast<size_t>(q)]) {
        throw ScheduleError("op " + g.op(p.ops[i]).name + " depends on op " + g.op(q).name +
                            " which runs later");
      }
    }
  }
  for (const auto& t : g.tensors()) {
    const bool produced_before = t.producer == kNoOp || done[static_cast<size_t>(t.producer)];
    const int producer = t.producer == kNoOp ? -1 : local[static_cast<size_t>(t.producer)];
    if (!produced_before && producer < 0) continue;
    OrderingProblem::Item item;
    item.size = t.size;
    item.producer = producer;
    bool later = t.consumers.empty();
    for (OpId c : t.consumers) {
      if (local[static_cast<size_t>(c)] >= 0) {
        item.consumers.push_back(local[static_cast<size_t>(c)]);
      } else if (!done[static_cast<size_t>(c)]) {
        later = true;
      }
    }
    item.live_out = later;
    if (producer < 0 && item.consumers.empty()) {
      if (later) p.base += t.size;
      continue;
    }
    p.items.push_back(std::move(item));
  }
  return p;
}

OrderingProblem make_ordering_problem(const Graph& g) {
  std::vector<OpId> ops(static_cast<size_t>(g.num_ops()));
  std::iota(ops.begin(), ops.end(), 0);
  return make_ordering_problem(g, ops, std::vector<bool>(ops.size(), false));
}

namespace {

// Bit-parallel view of a problem with at most 64 ops.
struct Packed {
  struct Item {
    Bytes size;
    std::uint64_t producer;  // 0 for live-in
    std::uint64_t consumers;
    bool live_out;
  };
  int n = 0;
  std::uint64_t all = 0;
  Bytes base = 0;
  std::vector<std::uint64_t> preds;
  std::vector<Item> items;
  std::vector<std::vector<int>> touching;  // items each op reads or writes

  explicit Packed(const OrderingProblem& p) : n(p.size()), base(p.base) {
    all = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
    preds.assign(static_cast<size_t>(n), 0);
    for (int v = 0; v < n; ++v) {
      for (int q : p.preds[static_cast<size_t>(v)]) preds[static_cast<size_t>(v)] |= std::uint64_t{1} << q;
    }
    touching.resize(static_cast<size_t>(n));
    for (const auto& it : p.items) {
      Item packed{it.size, 0, 0, it.live_out};
      if (it.producer >= 0) {
        packed.producer = std::uint64_t{1} << it.producer;
        touching[static_cast<size_t>(it.producer)].push_back(static_cast<int>(items.size()));
      }
      for (int c : it.consumers) {
        packed.consumers |= std::uint64_t{1} << c;
        touching[static_cast<size_t>(c)].push_back(static_cast<int>(items.size()));
      }
      items.push_back(packed);
    }
  }

  bool produced(const Item& it, std::uint64_t mask) const {
    return it.producer == 0 || (it.producer & mask) != 0;
  }

  // Live bytes while the ops in `step` run after everything in `done`.
  Bytes footprint(std::uint64_t done, std::uint64_t step) const {
    Bytes total = base;
    const std::uint64_t executed = done | step;
    for (const auto& it : items) {
      if (produced(it, executed) && (it.live_out || (it.consumers & ~done) != 0)) total += it.size;
    }
    return total;
  }

  // Bytes that stay resident once `done` has executed.
  Bytes resident(std::uint64_t done) const {
    Bytes total = base;
    for (const auto& it : items) {
      if (produced(it, done) && (it.live_out || (it.consumers & ~done) != 0)) total += it.size;
    }
    return total;
  }

  std::uint64_t ready(std::uint64_t done) const {
    std::uint64_t r = 0;
    for (int v = 0; v < n; ++v) {
      const auto bit = std::uint64_t{1} << v;
      if (!(done & bit) && (preds[static_cast<size_t>(v)] & ~done) == 0) r |= bit;
    }
    return r;
  }
};

std::vector<int> bits_of(std::uint64_t mask) {
  std::vector<int> out;
  while (mask) {
    out.push_back(std::countr_zero(mask));
    mask &= mask - 1;
  }
  return out;
}

void finish(const OrderingProblem& p, OrderingSolution& s) {
  s.order.clear();
  for (const auto& step : s.steps) {
    for (int v : step) s.order.push_back(p.ops[static_cast<size_t>(v)]);
  }
}



// Incremental execution state usable for any problem size.
class Execution {
 public:
  explicit Execution(const OrderingProblem& p) : p_(p) {
    const auto n = static_cast<size_t>(p.size());
    done_.assign(n, false);
    pending_preds_.assign(n, 0);
    outputs_.resize(n);
    inputs_.resize(n);
    out_bytes_.assign(n, 0);
    for (size_t v = 0; v < n; ++v) pending_preds_[v] = static_cast<int>(p.preds[v].size());
    succs_.resize(n);
    for (size_t v = 0; v < n; ++v) {
      for (int q : p.preds[v]) succs_[static_cast<size_t>(q)].push_back(static_cast<int>(v));
    }
    remaining_.resize(p.items.size());
    produced_.resize(p.items.size());
    resident_ = p.base;
    for (size_t i = 0; i < p.items.size(); ++i) {
      const auto& it = p.items[i];
      remaining_[i] = static_cast<int>(it.consumers.size());
      produced_[i] = it.producer < 0;
      if (it.producer >= 0) {
        outputs_[static_cast<size_t>(it.producer)].push_back(static_cast<int>(i));
        out_bytes_[static_cast<size_t>(it.producer)] += it.size;
      } else {
        resident_ += it.size;
      }
      for (int c : it.consumers) inputs_[static_cast<size_t>(c)].push_back(static_cast<int>(i));
    }
  }

  bool ready(int v) const {
    return !done_[static_cast<size_t>(v)] && pending_preds_[static_cast<size_t>(v)] == 0;
  }
  bool finished() const { return executed_ == p_.size(); }

  Bytes delta(int v) const {
    Bytes d = out_bytes_[static_cast<size_t>(v)];
    for (int i : inputs_[static_cast<size_t>(v)]) {
      const auto& it = p_.items[static_cast<size_t>(i)];
      if (!it.live_out && remaining_[static_cast<size_t>(i)] == 1 && produced_[static_cast<size_t>(i)]) {
        d -= it.size;
      }
    }
    return d;
  }

  Bytes footprint(std::span<const int> step) const {
    Bytes total = resident_;
    for (int v : step) total += out_bytes_[static_cast<size_t>(v)];
    return total;
  }

  // Runs one step; returns its footprint.
  Bytes run(std::span<const int> step) {
    if (step.empty() || static_cast<int>(step.size()) > p_.ops_per_step) {
      throw ScheduleError("step holds an invalid number of ops");
    }
    for (int v : step) {
      if (v < 0 || v >= p_.size()) throw ScheduleError("step references unknown op");
      if (!ready(v)) throw ScheduleError("op scheduled twice or before a predecessor");
    }
    const Bytes fp = footprint(step);
    for (int v : step) {
      done_[static_cast<size_t>(v)] = true;
      ++executed_;
      for (int i : outputs_[static_cast<size_t>(v)]) {
        produced_[static_cast<size_t>(i)] = true;
        resident_ += p_.items[static_cast<size_t>(i)].size;
      }
    }
    for (int v : step) {
      for (int i : inputs_[static_cast<size_t>(v)]) {
        const auto& it = p_.items[static_cast<size_t>(i)];
        if (--remaining_[static_cast<size_t>(i)] == 0 && !it.live_out) resident_ -= it.size;
      }
      for (int s : succs_[static_cast<size_t>(v)]) --pending_preds_[static_cast<size_t>(s)];
    }
    return fp;
  }

 private:
  const OrderingProblem& p_;
  std::vector<bool> done_;
  std::vector<int> pending_preds_;
  std::vector<std::vector<int>> succs_;
  std::vector<std::vector<int>> outputs_;
  std::vector<std::vector<int>> inputs_;
  std::vector<Bytes> out_bytes_;
  std::vector<int> remaining_;
  std::vector<bool> produced_;
  Bytes resident_ = 0;
  int executed_ = 0;
};

void require_valid(const OrderingProblem& p) {
  if (p.ops_per_step < 1) throw ConfigError("ops_per_step must be at least 1");
}

std::vector<std::vector<int>> greedy_steps(const OrderingProblem& p, Bytes& peak) {
  Execution ex(p);
  std::vector<std::vector<int>> steps;
  peak = 0;
  while (!ex.finished()) {
    std::vector<std::pair<Bytes, int>> ranked;
    for (int v = 0; v < p.size(); ++v) {
      if (ex.ready(v)) ranked.emplace_back(ex.delta(v), v);
    }
    if (ranked.empty()) throw ScheduleError("ordering problem has a dependency cycle");
    std::sort(ranked.begin(), ranked.end());
    std::vector<int> step{ranked.front().second};
    const Bytes limit = std::max(peak, ex.footprint(step));
    for (size_t i = 1; i < ranked.size() && static_cast<int>(step.size()) < p.ops_per_step; ++i) {
      step.push_back(ranked[i].second);
      if (ex.footprint(step) > limit) step.pop_back();
    }
    std::sort(step.begin(), step.end());
    peak = std::max(peak, ex.run(step));
    steps.push_back(std::move(step));
  }
  return steps;
}

std::uint64_t mask_of(const std::vector<int>& step) {
  std::uint64_t m = 0;
  for (int v : step) m |= std::uint64_t{1} << v;
  return m;
}

std::vector<std::vector<int>> unpack(const std::vector<std::uint64_t>& masks) {
  std::vector<std::vector<int>> out;
  out.reserve(masks.size());
  for (auto m : masks) out.push_back(bits_of(m));
  return out;
}

class BranchAndBound {
 public:
  BranchAndBound(const Packed& pk, int ops_per_step, std::chrono::duration<double> budget)
      : pk_(pk),
        ops_per_step_(ops_per_step),
        deadline_(Clock::now() + std::chrono::duration_cast<Clock::duration>(budget)) {}

  void run(std::vector<std::uint64_t> incumbent, Bytes incumbent_peak) {
    best_steps_ = std::move(incumbent);
    best_peak_ = incumbent_peak;
    dfs(0, 0);
  }

  const std::vector<std::uint64_t>& best_steps() const { return best_steps_; }
  Bytes best_peak() const { return best_peak_; }
  bool complete() const { return !timed_out_; }
  std::uint64_t nodes() const { return nodes_; }

 private:
  Bytes lower_bound(std::uint64_t done) const {
    // Everything resident now is still resident during the next step, and
    // every remaining op needs its own inputs and outputs on top of the
    // bytes that never get released.
    Bytes lb = pk_.resident(done);
    Bytes pinned = pk_.base;
    for (const auto& it : pk_.items) {
      if (it.live_out && pk_.produced(it, done)) pinned += it.size;
    }
    Bytes worst = 0;
    for (int v = 0; v < pk_.n; ++v) {
      const auto bit = std::uint64_t{1} << v;
      if (done & bit) continue;
      Bytes io = 0;
      for (int idx : pk_.touching[static_cast<size_t>(v)]) {
        const auto& it = pk_.items[static_cast<size_t>(idx)];
        if (!(it.live_out && pk_.produced(it, done))) io += it.size;
      }
      worst = std::max(worst, io);
    }
    return std::max(lb, pinned + worst);
  }

  void dfs(std::uint64_t done, Bytes peak) {
    if (timed_out_) return;
    if ((++nodes_ & 0x3ff) == 0 && Clock::now() > deadline_) {
      timed_out_ = true;
      return;
    }
    if (done == pk_.all) {
      if (peak < best_peak_) {
        best_peak_ = peak;
        best_steps_ = path_;
      }
      return;
    }
    if (peak >= best_peak_) return;
    auto [it, inserted] = memo_.try_emplace(done, peak);
    if (!inserted) {
      if (it->second <= peak) return;
      it->second = peak;
    }
    if (std::max(peak, lower_bound(done)) >= best_peak_) return;

    const auto ready = bits_of(pk_.ready(done));
    std::vector<std::pair<Bytes, std::uint64_t>> moves;
    const int k = std::min<int>(ops_per_step_, static_cast<int>(ready.size()));
    enumerate(ready, 0, 0, 0, k, done, moves);
    // Cheapest step first; among equal footprints prefer fuller steps.
    std::stable_sort(moves.begin(), moves.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return std::popcount(a.second) > std::popcount(b.second);
    });
    for (const auto& [fp, step] : moves) {
      const Bytes next = std::max(peak, fp);
      if (next >= best_peak_) break;
      path_.push_back(step);
      dfs(done | step, next);
      path_.pop_back();
      if (timed_out_) return;
    }
  }

  void enumerate(const std::vector<int>& ready, size_t from, std::uint64_t chosen, int count, int k,
                 std::uint64_t done, std::vector<std::pair<Bytes, std::uint64_t>>& out) const {
    if (count > 0) out.emplace_back(pk_.footprint(done, chosen), chosen);
    if (count == k) return;
    for (size_t i = from; i < ready.size(); ++i) {
      enumerate(ready, i + 1, chosen | (std::uint64_t{1} << ready[i]), count + 1, k, done, out);
    }
  }

  const Packed& pk_;
  int ops_per_step_;
  Clock::time_point deadline_;
  std::unordered_map<std::uint64_t, Bytes> memo_;
  std::vector<std::uint64_t> path_;
  std::vector<std::uint64_t> best_steps_;
  Bytes best_peak_ = std::numeric_limits<Bytes>::max();
  std::uint64_t nodes_ = 0;
  bool timed_out_ = false;
};

}  // namespace

Bytes evaluate_steps(const OrderingProblem& p, const std::vector<std::vector<int>>& steps) {
  require_valid(p);
  Execution ex(p);
  Bytes peak = 0;
  for (const auto& step : steps) peak = std::max(peak, ex.run(step));
  if (!ex.finished()) throw ScheduleError("steps do not cover every op");
  return peak;
}

OrderingSolution greedy_order(const OrderingProblem& p) {
  require_valid(p);
  const auto start = Clock::now();
  OrderingSolution s;
  s.steps = greedy_steps(p, s.peak);
  s.optimal = false;
  s.nodes = s.steps.size();
  s.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  finish(p, s);
  return s;
}

OrderingSolution exact_order(const OrderingProblem& p) {
  require_valid(p);
  if (p.size() > 64) throw ConfigError("exact ordering supports at most 64 ops");
  if (p.budget.count() <= 0) throw ConfigError("ordering time budget must be positive");
  const auto start = Clock::now();
  OrderingSolution s;
  if (p.size() == 0) {
    s.optimal = true;
    return s;
  }
  const Packed pk(p);
  Bytes incumbent_peak = 0;
  auto incumbent = greedy_steps(p, incumbent_peak);
  std::vector<std::uint64_t> incumbent_masks;
  for (const auto& step : incumbent) incumbent_masks.push_back(mask_of(step));
  BranchAndBound bnb(pk, p.ops_per_step, p.budget);
  // Only strict improvements replace the incumbent, so start the bound one
  // above the greedy peak; the search then reports its own canonical order.
  bnb.run(incumbent_masks, incumbent_peak + 1);
  if (bnb.best_peak() <= incumbent_peak) {
    s.steps = unpack(bnb.best_steps());
    s.peak = bnb.best_peak();
  } else {
    s.steps = std::move(incumbent);
    s.peak = incumbent_peak;
  }
  s.optimal = bnb.complete();
  s.nodes = bnb.nodes();
  s.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  finish(p, s);
  return s;
}


Schedule to_schedule(const OrderingProblem& p, const OrderingSolution& sol) {
  Schedule s;
  s.ops_per_step = p.ops_per_step;
  s.timestep_of.assign(p.ops.size(), 0);
  int step_index = 0;
  for (const auto& step : sol.steps) {
    for (int v : step) {
      const OpId id = p.ops[static_cast<size_t>(v)];
      if (id < 0 || static_cast<size_t>(id) >= p.ops.size()) {
        throw ScheduleError("problem does not cover the whole graph");
      }
      s.order.push_back(id);
      s.timestep_of[static_cast<size_t>(id)] = step_index;
    }
    ++step_index;
  }
  return s;
}

}  // namespace memplan

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


// Brute-force references used to check the solvers on small inputs.

#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "memplan/graph.hpp"
#include "memplan/layout.hpp"
#include "memplan/ordering.hpp"

namespace memplan::oracle {

// Calls f on every topological order of g.
inline void for_each_topological_order(const Graph& g, const std::function<void(const std::vector<OpId>&)>& f) {
  const int n = g.num_ops();
  std::vector<int> indeg(static_cast<size_t>(n));
  for (OpId v = 0; v < n; ++v) indeg[static_cast<size_t>(v)] = static_cast<int>(g.preds(v).size());
  std::vector<OpId> order;
  std::vector<bool> used(static_cast<size_t>(n));
  std::function<void()> rec = [&] {
    if (static_cast<int>(order.size()) == n) {
      f(order);
      return;
    }
    for (OpId v = 0; v < n; ++v) {
      if (used[static_cast<size_t>(v)] || indeg[static_cast<size_t>(v)] != 0) continue;
      used[static_cast<size_t>(v)] = true;
      order.push_back(v);
      for (OpId s : g.succs(v)) --indeg[static_cast<size_t>(s)];
      rec();
      for (OpId s : g.succs(v)) ++indeg[static_cast<size_t>(s)];
      order.pop_back();
      used[static_cast<size_t>(v)] = false;
    }
  };
  rec();
}

// Minimum theoretical peak over all sequential orders.
inline Bytes min_peak_sequential(const Graph& g) {
  Bytes best = std::numeric_limits<Bytes>::max();
  for_each_topological_order(g, [&](const std::vector<OpId>& order) {
    best = std::min(best, peak_memory(g, Schedule::sequential(order)).peak);
  });
  return best;
}

// Minimum peak over all step partitions with at most k ops per step.
inline Bytes min_peak_multi(const Graph& g, int k) {
  const int n = g.num_ops();
  Bytes best = std::numeric_limits<Bytes>::max();
  std::vector<int> step(static_cast<size_t>(n), -1);
  std::vector<OpId> order;
  std::function<void(int)> rec = [&](int t) {
    if (static_cast<int>(order.size()) == n) {
      Schedule s;
      s.order = order;
      s.timestep_of = step;
      s.ops_per_step = k;
      best = std::min(best, peak_memory(g, s).peak);
      return;
    }
    std::vector<OpId> ready;
    for (OpId v = 0; v < n; ++v) {
      if (step[static_cast<size_t>(v)] >= 0) continue;
      bool ok = true;
      for (OpId p : g.preds(v)) ok = ok && step[static_cast<size_t>(p)] >= 0 && step[static_cast<size_t>(p)] < t;
      if (ok) ready.push_back(v);
    }
    const int r = static_cast<int>(ready.size());
    for (int mask = 1; mask < (1 << r); ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) > k) continue;
      for (int i = 0; i < r; ++i) {
        if (mask >> i & 1) {
          step[static_cast<size_t>(ready[static_cast<size_t>(i)])] = t;
          order.push_back(ready[static_cast<size_t>(i)]);
        }
      }
      rec(t + 1);
      for (int i = 0; i < r; ++i) {
        if (mask >> i & 1) {
          step[static_cast<size_t>(ready[static_cast<size_t>(i)])] = -1;
          order.pop_back();
        }
      }
    }
  };
  rec(0);
  return best;
}

// Minimum capacity over all insertion orders, each item first-fit at the
// lowest offset (0 or the top of a placed item) free over its lifetime.
inline Bytes min_capacity(const std::vector<LayoutItem>& items) {
  std::vector<int> perm(items.size());
  std::iota(perm.begin(), perm.end(), 0);
  Bytes best = std::numeric_limits<Bytes>::max();
  do {
    std::vector<Bytes> off(items.size(), -1);
    Bytes cap = 0;
    for (int i : perm) {
      const auto& it = items[static_cast<size_t>(i)];
      std::vector<Bytes> cands{0};
      for (size_t j = 0; j < items.size(); ++j) {
        if (off[j] >= 0) cands.push_back(off[j] + items[j].size);
      }
      std::sort(cands.begin(), cands.end());
      for (Bytes y : cands) {
        bool fits = true;
        for (size_t j = 0; j < items.size() && fits; ++j) {
          if (off[j] < 0 || !it.live.overlaps(items[j].live)) continue;
          fits = y + it.size <= off[j] || off[j] + items[j].size <= y;
        }
        if (fits) {
          off[static_cast<size_t>(i)] = y;
          cap = std::max(cap, y + it.size);
          break;
        }
      }
      if (cap >= best) break;
    }
    best = std::min(best, cap);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Same search with the activations stacked from 0 (longest-lived lowest,
// then larger, then lower id) and every other item kept above the
// activations it shares time with.
inline Bytes min_capacity_stacked(const std::vector<LayoutItem>& items) {
  std::vector<size_t> acts;
  std::vector<int> rest;
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i].activation) {
      acts.push_back(i);
    } else {
      rest.push_back(static_cast<int>(i));
    }
  }
  std::sort(acts.begin(), acts.end(), [&](size_t a, size_t b) {
    const auto& x = items[a];
    const auto& y = items[b];
    if (x.live.length() != y.live.length()) return x.live.length() > y.live.length();
    if (x.size != y.size) return x.size > y.size;
    return x.id < y.id;
  });
  std::vector<Bytes> base(items.size(), -1);
  Bytes block = 0;
  for (size_t i : acts) {
    base[i] = block;
    block += items[i].size;
  }
  std::vector<Bytes> floor(items.size(), 0);
  for (int i : rest) {
    for (size_t a : acts) {
      if (items[a].live.overlaps(items[static_cast<size_t>(i)].live)) {
        floor[static_cast<size_t>(i)] = std::max(floor[static_cast<size_t>(i)], base[a] + items[a].size);
      }
    }
  }
  Bytes best = std::numeric_limits<Bytes>::max();
  do {
    std::vector<Bytes> off = base;
    Bytes cap = block;
    for (int i : rest) {
      const auto& it = items[static_cast<size_t>(i)];
      std::vector<Bytes> cands{floor[static_cast<size_t>(i)]};
      for (size_t j = 0; j < items.size(); ++j) {
        if (off[j] >= 0 && off[j] + items[j].size > floor[static_cast<size_t>(i)]) cands.push_back(off[j] + items[j].size);
      }
      std::sort(cands.begin(), cands.end());
      for (Bytes y : cands) {
        bool fits = true;
        for (size_t j = 0; j < items.size() && fits; ++j) {
          if (off[j] < 0 || !it.live.overlaps(items[j].live)) continue;
          fits = y + it.size <= off[j] || off[j] + items[j].size <= y;
        }
        if (fits) {
          off[static_cast<size_t>(i)] = y;
          cap = std::max(cap, y + it.size);
          break;
        }
      }
    }
    best = std::min(best, cap);
  } while (std::next_permutation(rest.begin(), rest.end()));
  return best;
}

}  // namespace memplan::oracle

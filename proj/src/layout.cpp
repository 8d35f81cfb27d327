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

#include "memplan/layout.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

namespace memplan {

using Clock = std::chrono::steady_clock;

Bytes clique_bound(std::span<const LayoutItem> items) {
  std::vector<std::pair<int, Bytes>> events;
  events.reserve(items.size() * 2);
  for (const auto& it : items) {
    events.emplace_back(it.live.start, it.size);
    events.emplace_back(it.live.end + 1, -it.size);
  }
  // Releases at a time point are applied before allocations.
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });
  Bytes running = 0;
  Bytes best = 0;
  for (const auto& [t, d] : events) {
    running += d;
    best = std::max(best, running);
  }
  return best;
}

namespace {

// Placement order of the activation block: longest-lived at the bottom.
std::vector<size_t> activation_order(std::span<const LayoutItem> items) {
  std::vector<size_t> acts;
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i].activation) acts.push_back(i);
  }
  std::sort(acts.begin(), acts.end(), [&](size_t a, size_t b) {
    const auto& x = items[a];
    const auto& y = items[b];
    if (x.live.length() != y.live.length()) return x.live.length() > y.live.length();
    if (x.size != y.size) return x.size > y.size;
    return x.id < y.id;
  });
  return acts;
}

// Shared preprocessing: fixed activation block plus per-item floors.
struct Prepared {
  std::vector<Bytes> offset;  // -1 when not yet placed
  std::vector<Bytes> floor;
  std::vector<size_t> free_items;
  Bytes block = 0;
};

Prepared prepare(const LayoutProblem& p) {
  const auto& items = p.items;
  Prepared prep;
  prep.offset.assign(items.size(), -1);
  prep.floor.assign(items.size(), 0);
  for (const auto& it : items) {
    if (it.size <= 0) throw InputError("layout item " + std::to_string(it.id) + " has non-positive size");
    if (it.live.end < it.live.start) throw InputError("layout item has an empty lifetime");
  }
  if (p.activations_at_bottom) {
    for (size_t i : activation_order(items)) {
      prep.offset[i] = prep.block;
      prep.block += items[i].size;
    }
    // Other items go above every activation they share time with; slots of
    // activations already released stay usable.
    for (size_t i = 0; i < items.size(); ++i) {
      if (items[i].activation) continue;
      for (size_t j = 0; j < items.size(); ++j) {
        if (items[j].activation && items[j].live.overlaps(items[i].live)) {
          prep.floor[i] = std::max(prep.floor[i], prep.offset[j] + items[j].size);
        }
      }
    }
  }
  for (size_t i = 0; i < items.size(); ++i) {
    if (prep.offset[i] < 0) prep.free_items.push_back(i);
  }
  return prep;
}

MemoryLayout to_layout(std::span<const LayoutItem> items, const std::vector<Bytes>& offset, Bytes block) {
  MemoryLayout m;
  m.activation_block_size = block;
  for (size_t i = 0; i < items.size(); ++i) {
    m.offsets[items[i].id] = offset[i];
    m.capacity = std::max(m.capacity, offset[i] + items[i].size);
  }
  return m;
}

bool fits(std::span<const LayoutItem> items, const std::vector<Bytes>& offset, size_t j, Bytes y) {
  const auto& it = items[j];
  for (size_t i = 0; i < items.size(); ++i) {
    if (i == j || offset[i] < 0 || !items[i].live.overlaps(it.live)) continue;
    if (offset[i] < y + it.size && y < offset[i] + items[i].size) return false;
  }
  return true;
}

class LayoutSearch {
 public:
  LayoutSearch(const LayoutProblem& p, Prepared prep)
      : items_(p.items),
        prep_(std::move(prep)),
        deadline_(Clock::now() + std::chrono::duration_cast<Clock::duration>(p.budget)) {
    for (const auto& it : items_) points_.push_back(it.live.start);
    std::sort(points_.begin(), points_.end());
    points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
    // Items that are interchangeable are placed in index order only.
    twin_of_.assign(items_.size(), -1);
    for (size_t a = 0; a < prep_.free_items.size(); ++a) {
      for (size_t b = 0; b < a; ++b) {
        const auto i = prep_.free_items[a];
        const auto j = prep_.free_items[b];
        if (items_[i].size == items_[j].size && items_[i].live == items_[j].live &&
            prep_.floor[i] == prep_.floor[j]) {
          twin_of_[i] = static_cast<int>(j);
        }
      }
    }
  }

  void run(std::vector<Bytes> incumbent, Bytes incumbent_capacity) {
    best_ = std::move(incumbent);
    best_capacity_ = incumbent_capacity;
    std::vector<Bytes> offset = prep_.offset;
    Bytes top = 0;
    for (size_t i = 0; i < items_.size(); ++i) {
      if (offset[i] >= 0) top = std::max(top, offset[i] + items_[i].size);
    }
    dfs(offset, prep_.free_items.size(), 0, -1, top);
  }

  const std::vector<Bytes>& best() const { return best_; }
  Bytes best_capacity() const { return best_capacity_; }
  bool complete() const { return !timed_out_; }
  std::uint64_t nodes() const { return nodes_; }

 private:
  Bytes stack_position(const std::vector<Bytes>& offset, size_t j) const {
    Bytes y = prep_.floor[j];
    for (size_t i = 0; i < items_.size(); ++i) {
      if (offset[i] >= 0 && items_[i].live.overlaps(items_[j].live)) {
        y = std::max(y, offset[i] + items_[i].size);
      }
    }
    return y;
  }

  // At each time point the pending items need room above both the last
  // placed offset and their own floors, next to what already sits there.
  Bytes lower_bound(const std::vector<Bytes>& offset, Bytes last_y, Bytes top) const {
    Bytes lb = top;
    for (int t : points_) {
      Bytes pending = 0;
      Bytes base = std::numeric_limits<Bytes>::max();
      for (size_t i = 0; i < items_.size(); ++i) {
        const auto& it = items_[i];
        if (offset[i] >= 0 || t < it.live.start || t > it.live.end) continue;
        pending += it.size;
        base = std::min(base, std::max(last_y, prep_.floor[i]));
        lb = std::max(lb, std::max(last_y, prep_.floor[i]) + it.size);
      }
      if (pending == 0) continue;
      Bytes above = 0;
      for (size_t i = 0; i < items_.size(); ++i) {
        const auto& it = items_[i];
        if (offset[i] < 0 || t < it.live.start || t > it.live.end) continue;
        above += std::max<Bytes>(0, offset[i] + it.size - std::max(offset[i], base));
      }
      lb = std::max(lb, base + above + pending);
    }
    return lb;
  }

  void dfs(std::vector<Bytes>& offset, size_t remaining, Bytes last_y, long last_index, Bytes top) {
    if (timed_out_) return;
    if ((++nodes_ & 0xff) == 0 && Clock::now() > deadline_) {
      timed_out_ = true;
      return;
    }
    if (remaining == 0) {
      if (top < best_capacity_) {
        best_capacity_ = top;
        best_ = offset;
      }
      return;
    }
    if (lower_bound(offset, last_y, top) >= best_capacity_) return;

    struct Move {
      Bytes y;
      size_t item;
    };
    std::vector<Move> moves;
    for (size_t j : prep_.free_items) {
      if (offset[j] >= 0) continue;
      if (twin_of_[j] >= 0 && offset[static_cast<size_t>(twin_of_[j])] < 0) continue;
      const Bytes y = stack_position(offset, j);
      if (y < last_y || (y == last_y && static_cast<long>(j) < last_index)) continue;
      if (y + items_[j].size >= best_capacity_) continue;
      moves.push_back({y, j});
    }
    std::sort(moves.begin(), moves.end(), [&](const Move& a, const Move& b) {
      if (a.y != b.y) return a.y < b.y;
      return a.item < b.item;
    });
    for (const auto& mv : moves) {
      offset[mv.item] = mv.y;
      dfs(offset, remaining - 1, mv.y, static_cast<long>(mv.item),
          std::max(top, mv.y + items_[mv.item].size));
      offset[mv.item] = -1;
      if (timed_out_) return;
    }
  }

  std::span<const LayoutItem> items_;
  Prepared prep_;
  Clock::time_point deadline_;
  std::vector<int> points_;
  std::vector<int> twin_of_;
  std::vector<Bytes> best_;
  Bytes best_capacity_ = std::numeric_limits<Bytes>::max();
  std::uint64_t nodes_ = 0;
  bool timed_out_ = false;
};

std::vector<Bytes> llfb_offsets(const LayoutProblem& p, const Prepared& prep) {
  const auto& items = p.items;
  std::vector<Bytes> offset = prep.offset;
  std::vector<size_t> pending = prep.free_items;
  std::sort(pending.begin(), pending.end(), [&](size_t a, size_t b) {
    const auto& x = items[a];
    const auto& y = items[b];
    if (x.live.length() != y.live.length()) return x.live.length() > y.live.length();
    if (x.size != y.size) return x.size > y.size;
    return x.id < y.id;
  });
  std::set<Bytes> candidates{0};
  for (size_t i = 0; i < items.size(); ++i) {
    if (offset[i] >= 0) candidates.insert(offset[i] + items[i].size);
  }
  for (size_t i : pending) candidates.insert(prep.floor[i]);
  auto cursor = candidates.begin();
  while (!pending.empty()) {
    const Bytes o = *cursor;
    bool placed = false;
    for (auto it = pending.begin(); it != pending.end(); ++it) {
      if (prep.floor[*it] > o || !fits(items, offset, *it, o)) continue;
      offset[*it] = o;
      candidates.insert(o + items[*it].size);
      pending.erase(it);
      placed = true;
      break;
    }
    if (!placed) ++cursor;
  }
  return offset;
}

}  // namespace

MemoryLayout llfb_layout(const LayoutProblem& p) {
  const auto prep = prepare(p);
  return to_layout(p.items, llfb_offsets(p, prep), prep.block);
}

LayoutSolution exact_layout(const LayoutProblem& p) {
  if (p.budget.count() <= 0) throw ConfigError("layout time budget must be positive");
  const auto start = Clock::now();
  auto prep = prepare(p);
  const Bytes block = prep.block;
  auto incumbent = llfb_offsets(p, prep);
  Bytes incumbent_capacity = 0;
  for (size_t i = 0; i < p.items.size(); ++i) {
    incumbent_capacity = std::max(incumbent_capacity, incumbent[i] + p.items[i].size);
  }
  LayoutSolution s;
  if (incumbent_capacity <= std::max(clique_bound(p.items), block)) {
    s.layout = to_layout(p.items, incumbent, block);
    s.optimal = true;
  } else {
    LayoutSearch search(p, std::move(prep));
    search.run(incumbent, incumbent_capacity);
    s.layout = to_layout(p.items, search.best(), block);
    s.optimal = search.complete();
    s.nodes = search.nodes();
  }
  s.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return s;
}

MemoryLayout concat_layouts(std::span<const LayoutPart> parts) {
  MemoryLayout merged;
  Bytes base = 0;
  for (const auto& part : parts) {
    const auto& m = part.layout;
    Bytes act_total = 0;
    for (const auto& it : part.items) {
      const auto off = m.offsets.find(it.id);
      if (off == m.offsets.end()) {
        throw InvariantError("sub-layout is missing tensor " + std::to_string(it.id));
      }
      if (!it.activation) continue;
      act_total += it.size;
      if (off->second < 0 || off->second + it.size > m.activation_block_size) {
        throw InvariantError("activation " + std::to_string(it.id) + " lies outside its block");
      }
    }
    if (act_total != m.activation_block_size) {
      throw InvariantError("activation block is not contiguous");
    }
    for (const auto& [id, off] : m.offsets) {
      if (!merged.offsets.emplace(id, base + off).second) {
        throw InvariantError("tensor " + std::to_string(id) + " placed by two sub-layouts");
      }
    }
    merged.capacity = std::max(merged.capacity, base + m.capacity);
    base += m.activation_block_size;
  }
  merged.activation_block_size = base;
  return merged;
}

namespace {

std::vector<std::pair<size_t, size_t>> conflicting_pairs(std::span<const LayoutItem> items,
                                                         const MemoryLayout& m) {
  std::vector<size_t> order;
  for (size_t i = 0; i < items.size(); ++i) {
    if (m.offsets.count(items[i].id)) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (items[a].live.start != items[b].live.start) return items[a].live.start < items[b].live.start;
    return items[a].id < items[b].id;
  });
  std::vector<std::pair<size_t, size_t>> out;
  for (size_t x = 0; x < order.size(); ++x) {
    const auto& a = items[order[x]];
    const Bytes oa = m.offsets.at(a.id);
    for (size_t y = x + 1; y < order.size(); ++y) {
      const auto& b = items[order[y]];
      if (b.live.start > a.live.end) break;
      const Bytes ob = m.offsets.at(b.id);
      if (oa < ob + b.size && ob < oa + a.size) {
        out.emplace_back(std::min(order[x], order[y]), std::max(order[x], order[y]));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<LayoutViolation> validate_layout(std::span<const LayoutItem> items, const MemoryLayout& m) {
  std::vector<LayoutViolation> out;
  for (const auto& it : items) {
    const auto off = m.offsets.find(it.id);
    if (off == m.offsets.end()) {
      out.push_back({LayoutViolation::Kind::kMissing, it.id, -1,
                     "tensor " + std::to_string(it.id) + " has no offset"});
    } else if (off->second < 0 || off->second + it.size > m.capacity) {
      out.push_back({LayoutViolation::Kind::kExtent, it.id, -1,
                     "tensor " + std::to_string(it.id) + " extends past capacity"});
    }
  }
  for (const auto& [a, b] : conflicting_pairs(items, m)) {
    const auto ta = std::min(items[a].id, items[b].id);
    const auto tb = std::max(items[a].id, items[b].id);
    out.push_back({LayoutViolation::Kind::kOverlap, ta, tb,
                   "tensors " + std::to_string(ta) + " and " + std::to_string(tb) +
                       " overlap in time and address"});
  }
  return out;
}

std::vector<LayoutItem> layout_items(const Graph& g, const Schedule& s) {
  const auto live = tensor_lifetimes(g, s);
  const auto categories = classify_tensors(g);
  std::vector<LayoutItem> items;
  items.reserve(static_cast<size_t>(g.num_tensors()));
  for (const auto& t : g.tensors()) {
    items.push_back({t.id, t.size, live[static_cast<size_t>(t.id)],
                     categories[static_cast<size_t>(t.id)] == TensorCategory::kActivation});
  }
  return items;
}

std::vector<LayoutViolation> validate_layout(const Graph& g, const Schedule& s, const MemoryLayout& m) {
  check_schedule(g, s);
  return validate_layout(layout_items(g, s), m);
}

MemoryLayout repair_conflicts(MemoryLayout m, const LayoutProblem& p) {
  const auto& items = p.items;
  // Rank: activations stay put, then bigger, then longer-lived, then lower id.
  auto keeps = [&](size_t a, size_t b) {
    const auto& x = items[a];
    const auto& y = items[b];
    if (x.activation != y.activation) return x.activation;
    if (x.size != y.size) return x.size > y.size;
    if (x.live.length() != y.live.length()) return x.live.length() > y.live.length();
    return x.id < y.id;
  };
  // Best-fit into the tightest free gap over j's lifetime, else on top.
  auto placed = [&](const MemoryLayout& base, size_t j) {
    const auto& it = items[j];
    MemoryLayout out = base;
    std::vector<std::pair<Bytes, Bytes>> busy;
    for (size_t i = 0; i < items.size(); ++i) {
      if (i == j || !items[i].live.overlaps(it.live)) continue;
      const auto off = out.offsets.find(items[i].id);
      if (off == out.offsets.end()) continue;
      busy.emplace_back(off->second, off->second + items[i].size);
    }
    std::sort(busy.begin(), busy.end());
    Bytes best_gap = std::numeric_limits<Bytes>::max();
    Bytes best_at = -1;
    Bytes cursor = 0;
    auto consider = [&](Bytes lo, Bytes hi) {
      if (hi - lo >= it.size && hi - lo < best_gap) {
        best_gap = hi - lo;
        best_at = lo;
      }
    };
    for (const auto& [lo, hi] : busy) {
      if (lo > cursor) consider(cursor, lo);
      cursor = std::max(cursor, hi);
    }
    if (out.capacity > cursor) consider(cursor, out.capacity);
    if (best_at < 0) {
      best_at = cursor;
      out.capacity = std::max(out.capacity, cursor + it.size);
    }
    out.offsets[it.id] = best_at;
    return out;
  };
  auto moved = [&](size_t j) {
    MemoryLayout without = m;
    without.offsets.erase(items[j].id);
    return placed(without, j);
  };

  // Each move lands in space that is free over the mover's whole lifetime,
  // so it settles its pair without creating new conflicts.
  for (auto pairs = conflicting_pairs(items, m); !pairs.empty(); pairs = conflicting_pairs(items, m)) {
    const auto [a, b] = pairs.front();
    const size_t keep = keeps(a, b) ? a : b;
    const size_t move = keep == a ? b : a;
    auto next = moved(move);
    // Moving the larger member instead is taken only when strictly cheaper.
    if (!items[keep].activation) {
      auto alt = moved(keep);
      if (alt.capacity < next.capacity) next = std::move(alt);
    }
    m = std::move(next);
  }
  if (!conflicting_pairs(items, m).empty()) throw InvariantError("conflict repair left an overlap");
  return m;
}

namespace {

// Joint re-placement of a few items against fixed obstacles. Every layout
// is reachable by inserting items in offset order with first-fit, so the
// search runs over insertion orders.
class WindowSearch {
 public:
  WindowSearch(std::span<const LayoutItem> items, std::vector<Bytes>& offset, std::vector<size_t> movers,
               std::vector<Bytes> floors, std::uint64_t node_budget)
      : items_(items), offset_(offset), movers_(std::move(movers)), floor_(std::move(floors)), budget_(node_budget) {
    for (size_t k = 0; k < movers_.size(); ++k) offset_[movers_[k]] = -1;
    busy_.resize(movers_.size());
    for (size_t k = 0; k < movers_.size(); ++k) {
      const auto& it = items_[movers_[k]];
      for (size_t i = 0; i < items_.size(); ++i) {
        if (offset_[i] >= 0 && items_[i].live.overlaps(it.live)) {
          busy_[k].emplace_back(offset_[i], offset_[i] + items_[i].size);
        }
      }
      std::sort(busy_[k].begin(), busy_[k].end());
    }
  }

  // Offsets for the movers with every top below `limit`, if found.
  bool solve(Bytes limit) {
    best_top_ = limit;
    placed_.assign(movers_.size(), -1);
    dfs(0, 0, 0, 0);
    return found_;
  }
  const std::vector<Bytes>& result() const { return best_; }

 private:
  Bytes first_fit(size_t k) const {
    const auto& it = items_[movers_[k]];
    std::vector<std::pair<Bytes, Bytes>> busy = busy_[k];
    for (size_t q = 0; q < movers_.size(); ++q) {
      if (placed_[q] >= 0 && items_[movers_[q]].live.overlaps(it.live)) {
        busy.emplace_back(placed_[q], placed_[q] + items_[movers_[q]].size);
      }
    }
    std::sort(busy.begin(), busy.end());
    Bytes y = floor_[k];
    for (const auto& [lo, hi] : busy) {
      if (lo >= y + it.size) break;
      if (hi > y) y = hi;
    }
    return y;
  }

  // Insertion runs in nondecreasing offset order (ties by mover index).
  // Sorting any layout by offset and re-inserting first-fit never raises an
  // item, so iterating that reaches a layout this order enumerates.
  void dfs(size_t depth, Bytes top, Bytes last_y, size_t last_k) {
    if (nodes_++ >= budget_) return;
    if (depth == movers_.size()) {
      found_ = true;
      best_top_ = top;
      best_ = placed_;
      return;
    }
    std::vector<Bytes> ys(movers_.size(), -1);
    for (size_t k = 0; k < movers_.size(); ++k) {
      if (placed_[k] >= 0) continue;
      ys[k] = first_fit(k);
      // First-fit offsets only grow as more movers land.
      if (ys[k] + items_[movers_[k]].size >= best_top_) return;
    }
    for (size_t k = 0; k < movers_.size(); ++k) {
      if (placed_[k] >= 0) continue;
      const Bytes y = ys[k];
      if (y < last_y || (y == last_y && k < last_k)) continue;
      if (y + items_[movers_[k]].size >= best_top_) continue;
      placed_[k] = y;
      dfs(depth + 1, std::max(top, y + items_[movers_[k]].size), y, k);
      placed_[k] = -1;
      if (nodes_ >= budget_) return;
    }
  }

  std::span<const LayoutItem> items_;
  std::vector<Bytes>& offset_;
  std::vector<size_t> movers_;
  std::vector<Bytes> floor_;
  std::vector<std::vector<std::pair<Bytes, Bytes>>> busy_;
  std::vector<Bytes> placed_;
  std::vector<Bytes> best_;
  Bytes best_top_ = 0;
  std::uint64_t nodes_ = 0;
  std::uint64_t budget_;
  bool found_ = false;
};

}  // namespace

MemoryLayout compact_layout(MemoryLayout m, const LayoutProblem& p, std::uint64_t node_budget) {
  const auto& items = p.items;
  constexpr size_t kMaxMovers = 12;
  if (!validate_layout(items, m).empty()) throw InvariantError("compaction needs a valid layout");
  std::vector<Bytes> offset(items.size());
  for (size_t i = 0; i < items.size(); ++i) offset[i] = m.offsets.at(items[i].id);

  const Bytes bound = clique_bound(items);
  for (size_t round = 0; round < 4 * items.size(); ++round) {
    Bytes cap = 0;
    for (size_t i = 0; i < items.size(); ++i) cap = std::max(cap, offset[i] + items[i].size);
    if (cap <= bound) break;
    size_t x = items.size();
    bool pinned = false;
    for (size_t i = 0; i < items.size(); ++i) {
      if (offset[i] + items[i].size != cap) continue;
      if (items[i].activation) pinned = true;
      if (x == items.size() || items[i].id < items[x].id) x = i;
    }
    if (pinned || x == items.size()) break;

    // Movers come in rings: temporaries sharing time with the top item, then
    // those sharing time with the first ring. Each ring is tried in turn.
    const auto by_top = [&](size_t a, size_t b) {
      const Bytes ta = offset[a] + items[a].size;
      const Bytes tb = offset[b] + items[b].size;
      return ta != tb ? ta > tb : items[a].id < items[b].id;
    };
    std::vector<size_t> ring1;
    for (size_t i = 0; i < items.size(); ++i) {
      if (!items[i].activation && items[i].live.overlaps(items[x].live)) ring1.push_back(i);
    }
    std::sort(ring1.begin(), ring1.end(), by_top);
    if (ring1.size() > kMaxMovers) ring1.resize(kMaxMovers);
    std::vector<size_t> ring2 = ring1;
    for (size_t i = 0; i < items.size(); ++i) {
      if (items[i].activation || std::find(ring1.begin(), ring1.end(), i) != ring1.end()) continue;
      if (std::any_of(ring1.begin(), ring1.end(), [&](size_t j) { return items[i].live.overlaps(items[j].live); })) {
        ring2.push_back(i);
      }
    }
    std::sort(ring2.begin() + static_cast<std::ptrdiff_t>(ring1.size()), ring2.end(), by_top);
    if (ring2.size() > kMaxMovers + kMaxMovers / 2) ring2.resize(kMaxMovers + kMaxMovers / 2);

    bool improved = false;
    for (const auto* movers : {&ring1, &ring2}) {
      if (movers == &ring2 && ring2.size() == ring1.size()) break;
      // Keep every mover above the activations it currently sits over.
      std::vector<Bytes> floors;
      for (size_t j : *movers) {
        Bytes f = 0;
        for (size_t i = 0; i < items.size(); ++i) {
          if (items[i].activation && items[i].live.overlaps(items[j].live) && offset[i] <= offset[j]) {
            f = std::max(f, offset[i] + items[i].size);
          }
        }
        floors.push_back(f);
      }
      std::vector<Bytes> trial = offset;
      WindowSearch search(items, trial, *movers, floors, node_budget);
      if (!search.solve(cap)) continue;
      for (size_t k = 0; k < movers->size(); ++k) offset[(*movers)[k]] = search.result()[k];
      improved = true;
      break;
    }
    if (!improved) break;
  }

  MemoryLayout out;
  out.activation_block_size = m.activation_block_size;
  for (size_t i = 0; i < items.size(); ++i) {
    out.offsets[items[i].id] = offset[i];
    out.capacity = std::max(out.capacity, offset[i] + items[i].size);
  }
  if (!validate_layout(items, out).empty()) throw InvariantError("compaction produced an overlap");
  return out;
}

double fragmentation_pct(Bytes actual, Bytes theoretical) {
  if (theoretical < 0 || actual < theoretical) {
    throw InvariantError("actual requirement " + std::to_string(actual) +
                         " is below the theoretical peak " + std::to_string(theoretical));
  }
  if (actual == 0) return 0.0;
  return 100.0 * static_cast<double>(actual - theoretical) / static_cast<double>(actual);
}

}  // namespace memplan

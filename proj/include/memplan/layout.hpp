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

#include <chrono>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "memplan/graph.hpp"

namespace memplan {

struct LayoutItem {
  TensorId id = -1;
  Bytes size = 0;
  Interval live;
  bool activation = false;
};

struct LayoutProblem {
  std::vector<LayoutItem> items;
  // Stack the activations contiguously from offset 0 (longest-lived lowest)
  // and keep every other item above the activations it shares time with.
  bool activations_at_bottom = false;
  std::chrono::duration<double> budget{60.0};
};

struct MemoryLayout {
  std::map<TensorId, Bytes> offsets;
  Bytes capacity = 0;
  Bytes activation_block_size = 0;

  friend bool operator==(const MemoryLayout&, const MemoryLayout&) = default;
};

struct LayoutSolution {
  MemoryLayout layout;
  bool optimal = false;
  std::uint64_t nodes = 0;
  double seconds = 0.0;
};

// Largest total size of simultaneously live items; no layout can be smaller.
Bytes clique_bound(std::span<const LayoutItem> items);

// Minimum-capacity offsets by branch and bound. Every item is stacked on the
// highest time-overlapping item already placed (or on its floor), and items
// are placed in nondecreasing offset order, which covers every layout in
// gravity normal form. LLFB seeds the incumbent. Anytime within the budget.
LayoutSolution exact_layout(const LayoutProblem& p);

// Long-lived-first best-fit baseline: at the lowest offset that still has
// room, place the longest-lived item that fits there.
MemoryLayout llfb_layout(const LayoutProblem& p);

// One sub-layout together with the items it places (sizes and activation
// flags are needed to check the activation-block contract).
struct LayoutPart {
  MemoryLayout layout;
  std::vector<LayoutItem> items;
};

// Stacks sub-layouts: each part is shifted up by the accumulated activation
// blocks of the parts before it. Parts come bottom (longest-lived) first.
// Throws InvariantError if a part's activations do not tile its block.
MemoryLayout concat_layouts(std::span<const LayoutPart> parts);

struct LayoutViolation {
  enum class Kind { kOverlap, kExtent, kMissing };
  Kind kind = Kind::kOverlap;
  TensorId first = -1;
  TensorId second = -1;
  std::string message;
};

std::vector<LayoutViolation> validate_layout(std::span<const LayoutItem> items,
                                             const MemoryLayout& m);
std::vector<LayoutViolation> validate_layout(const Graph& g, const Schedule& s,
                                             const MemoryLayout& m);

// Items (with lifetimes) for every tensor of g under s.
std::vector<LayoutItem> layout_items(const Graph& g, const Schedule& s);

// Moves the smaller, shorter-lived member of every address conflict into the
// tightest free gap that fits it, growing capacity only when none does.
MemoryLayout repair_conflicts(MemoryLayout m, const LayoutProblem& p);

// Lowers capacity by jointly re-placing the temporaries that share time with
// the item at the top, all other items fixed. Repeats while that succeeds;
// the search is capped at node_budget nodes per attempt. Needs a valid m.
MemoryLayout compact_layout(MemoryLayout m, const LayoutProblem& p, std::uint64_t node_budget = 20000);

// 100 * (actual - theoretical) / actual, 0 when both are 0.
double fragmentation_pct(Bytes actual, Bytes theoretical);

}  // namespace memplan

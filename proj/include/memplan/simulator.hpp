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

#include <string>
#include <vector>

#include "memplan/graph.hpp"
#include "memplan/layout.hpp"

namespace memplan {

enum class AllocPolicy { kBestFit, kFirstFit };

// Address-space model of a caching allocator. Blocks tile [0, high_water)
// and adjacent free blocks are merged on release.
class AllocatorModel {
 public:
  struct Block {
    Bytes offset = 0;
    Bytes size = 0;
    bool free = true;
  };

  explicit AllocatorModel(AllocPolicy policy = AllocPolicy::kBestFit) : policy_(policy) {}

  // Returns the offset of a new block of `size` bytes. Picks a free block by
  // policy and splits it; when none is large enough the trailing free block
  // (if any) is extended, otherwise the space grows at the top.
  Bytes allocate(Bytes size);
  void release(Bytes offset);

  Bytes high_water() const { return high_water_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  AllocPolicy policy() const { return policy_; }

 private:
  AllocPolicy policy_;
  std::vector<Block> blocks_;
  Bytes high_water_ = 0;
};

struct AllocEvent {
  enum class Action { kAlloc, kFree };
  int timestep = 0;
  Action action = Action::kAlloc;
  TensorId tensor = -1;
  Bytes offset = 0;
  Bytes size = 0;
};

struct DynamicReplay {
  Bytes actual_peak = 0;
  Bytes theoretical_peak = 0;
  double fragmentation_pct = 0.0;
  std::vector<AllocEvent> trace;
};

// Outputs are allocated when their op starts; a tensor is released at the
// end of its last consumer's timestep (never, for unconsumed tensors).
DynamicReplay replay_dynamic(const Graph& g, const Schedule& s, AllocPolicy policy = AllocPolicy::kBestFit);

struct StaticReplay {
  Bytes actual_peak = 0;
  std::vector<LayoutViolation> violations;
};

// Occupancy at the fixed offsets of m, step by step.
StaticReplay replay_static(const Graph& g, const Schedule& s, const MemoryLayout& m);

// One JSON object per line: timestep, action, tensor (document id), offset,
// size.
std::string trace_to_jsonl(const Graph& g, const std::vector<AllocEvent>& trace);

}  // namespace memplan

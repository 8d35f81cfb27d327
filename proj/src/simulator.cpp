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


#include "memplan/simulator.hpp"

#include <algorithm>
#include "json.hpp"
#include <sstream>

namespace memplan {

Bytes AllocatorModel::allocate(Bytes size) {
  if (size <= 0) throw InvariantError("allocation of non-positive size");
  size_t pick = blocks_.size();
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    if (!b.free || b.size < size) continue;
    if (pick == blocks_.size() || (policy_ == AllocPolicy::kBestFit && b.size < blocks_[pick].size)) pick = i;
    if (policy_ == AllocPolicy::kFirstFit) break;
  }
  if (pick == blocks_.size()) {
    if (!blocks_.empty() && blocks_.back().free) {
      high_water_ += size - blocks_.back().size;
      blocks_.back().size = size;
      pick = blocks_.size() - 1;
    } else {
      blocks_.push_back({high_water_, size, true});
      high_water_ += size;
      pick = blocks_.size() - 1;
    }
  }
  auto& b = blocks_[pick];
  const Bytes offset = b.offset;
  if (b.size > size) {
    const Block rest{b.offset + size, b.size - size, true};
    b.size = size;
    b.free = false;
    blocks_.insert(blocks_.begin() + static_cast<long>(pick) + 1, rest);
  } else {
    b.free = false;
  }
  return offset;
}

void AllocatorModel::release(Bytes offset) {
  auto it = std::find_if(blocks_.begin(), blocks_.end(), [&](const Block& b) { return b.offset == offset; });
  if (it == blocks_.end() || it->free) throw InvariantError("release of an unallocated block");
  it->free = true;
  if (auto next = it + 1; next != blocks_.end() && next->free) {
    it->size += next->size;
    it = std::prev(blocks_.erase(next));
  }
  if (it != blocks_.begin()) {
    auto prev = it - 1;
    if (prev->free) {
      prev->size += it->size;
      blocks_.erase(it);
    }
  }
}

DynamicReplay replay_dynamic(const Graph& g, const Schedule& s, AllocPolicy policy) {
  check_schedule(g, s);
  DynamicReplay out;
  out.theoretical_peak = peak_memory(g, s).peak;
  const auto live = tensor_lifetimes(g, s);
  const int steps = s.num_steps();
  std::vector<std::vector<TensorId>> frees(static_cast<size_t>(steps));
  for (const auto& t : g.tensors()) {
    if (!t.consumers.empty()) frees[static_cast<size_t>(live[static_cast<size_t>(t.id)].end)].push_back(t.id);
  }
  std::vector<Bytes> offset(static_cast<size_t>(g.num_tensors()), -1);
  AllocatorModel alloc(policy);
  size_t pos = 0;
  for (int step = 0; step < steps; ++step) {
    for (; pos < s.order.size() && s.timestep_of[static_cast<size_t>(s.order[pos])] == step; ++pos) {
      for (TensorId t : g.op(s.order[pos]).outputs) {
        const Bytes size = g.tensor(t).size;
        offset[static_cast<size_t>(t)] = alloc.allocate(size);
        out.trace.push_back({step, AllocEvent::Action::kAlloc, t, offset[static_cast<size_t>(t)], size});
      }
    }
    auto& done = frees[static_cast<size_t>(step)];
    std::sort(done.begin(), done.end());
    for (TensorId t : done) {
      alloc.release(offset[static_cast<size_t>(t)]);
      out.trace.push_back({step, AllocEvent::Action::kFree, t, offset[static_cast<size_t>(t)], g.tensor(t).size});
    }
  }
  out.actual_peak = alloc.high_water();
  out.fragmentation_pct = fragmentation_pct(out.actual_peak, out.theoretical_peak);
  return out;
}

StaticReplay replay_static(const Graph& g, const Schedule& s, const MemoryLayout& m) {
  check_schedule(g, s);
  const auto items = layout_items(g, s);
  StaticReplay out;
  for (const auto& v : validate_layout(items, m)) {
    if (v.kind != LayoutViolation::Kind::kExtent) out.violations.push_back(v);
  }
  // Highest occupied byte over all steps; every tensor is live somewhere.
  for (const auto& it : items) {
    const auto off = m.offsets.find(it.id);
    if (off != m.offsets.end()) out.actual_peak = std::max(out.actual_peak, off->second + it.size);
  }
  return out;
}

std::string trace_to_jsonl(const Graph& g, const std::vector<AllocEvent>& trace) {
  std::ostringstream os;
  for (const auto& e : trace) {
    nlohmann::ordered_json j;
    j["timestep"] = e.timestep;
    j["action"] = e.action == AllocEvent::Action::kAlloc ? "alloc" : "free";
    j["tensor"] = g.tensor(e.tensor).key;
    j["offset"] = e.offset;
    j["size"] = e.size;
    os << j.dump() << '\n';
  }
  return os.str();
}

}  // namespace memplan

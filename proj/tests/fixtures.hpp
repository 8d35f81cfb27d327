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


// Small hand-built graphs shared by the unit tests.

#pragma once

#include <fstream>
#include <string>

#include "json.hpp"
#include "memplan/graph.hpp"
#include "memplan/graphgen.hpp"
#include "memplan/layout.hpp"

namespace memplan::fixture {

inline Graph diamond() { return gen_diamond(); }

inline Graph chain(int n, Bytes size) {
  GraphBuilder b;
  TensorId prev = -1;
  for (int i = 0; i < n; ++i) {
    const auto out = b.add_tensor(size);
    b.add_op("op" + std::to_string(i), OpKind::kForward, prev < 0 ? std::vector<TensorId>{} : std::vector<TensorId>{prev}, {out});
    prev = out;
  }
  return b.build();
}

struct StoredLayout {
  LayoutProblem problem;
  Bytes exact_capacity = 0;
  Bytes llfb_capacity = 0;
};

// Layout instance stored under tests/fixtures, sizes given in MiB.
inline StoredLayout load_layout(const std::string& name, const std::string& dir = MEMPLAN_FIXTURE_DIR) {
  std::ifstream in(dir + "/" + name);
  if (!in) throw InputError("cannot open fixture " + name);
  const auto j = nlohmann::json::parse(in);
  StoredLayout out;
  for (const auto& it : j.at("items")) {
    out.problem.items.push_back({it.at("id").get<TensorId>(), it.at("size_mib").get<Bytes>() * kMiB,
                                 {it.at("start").get<int>(), it.at("end").get<int>()}, false});
  }
  out.exact_capacity = j.at("exact_capacity_mib").get<Bytes>() * kMiB;
  out.llfb_capacity = j.at("llfb_capacity_mib").get<Bytes>() * kMiB;
  return out;
}

}  // namespace memplan::fixture

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

#include <map>
#include <string>
#include <vector>

#include "memplan/graph.hpp"
#include "memplan/segmentation.hpp"

namespace memplan {

struct WeightUpdateConfig {
  double delay_radius = 2.0;
  // Footprint multiple of the gradient per optimizer; "default" applies to
  // branches whose optimizer cannot be told from the op names.
  std::map<std::string, double> alpha{{"adam", 3.0}, {"sgd", 1.0}};
};

struct WeightUpdateCost {
  Bytes esti_pm = 0;   // all activations at once
  Bytes mem_atvs = 0;  // activations that may be live at t
  double mem_used = 0.0;
};

// Memory estimate for running a branch at timestep t, from asap/alap bounds:
// an activation may be live at t when asap(producer) <= t <= max alap of its
// consumers.
class WeightUpdateModel {
 public:
  explicit WeightUpdateModel(const Graph& g);

  Bytes esti_pm() const { return esti_pm_; }
  Bytes mem_atvs(int t) const;
  WeightUpdateCost cost(int t, Bytes grad_size, double alpha) const;
  double mean_tensor_size() const { return mean_size_; }
  const ScheduleBounds& bounds() const { return bounds_; }

 private:
  ScheduleBounds bounds_;
  std::vector<std::pair<Interval, Bytes>> activations_;
  Bytes esti_pm_ = 0;
  double mean_size_ = 0.0;
};

WeightUpdateCost weight_update_cost(const Graph& g, int t, const WeightUpdateBranch& branch, double alpha);

// Optimizer tag of a branch: the op-name prefix before the first '/'.
std::string optimizer_of(const Graph& g, const WeightUpdateBranch& branch);

// Throws ConfigError when neither the tag nor "default" has an entry.
double alpha_for(const WeightUpdateConfig& cfg, const std::string& optimizer);

struct BranchPlacement {
  int unit = 0;
  bool delayed = false;
  Bytes grad_size = 0;
  double alpha = 1.0;
  double ratio = 0.0;
  double mem_used = 0.0;
};

struct WeightUpdatePlan {
  std::vector<BranchPlacement> branches;
  Bytes esti_pm = 0;

  std::vector<int> units() const;
};

// Delays a branch when its gradient is large relative to the mean tensor
// (ratio > delay_radius) and running it when the gradient appears would push
// the estimate past esti_pm. A delayed branch moves to the first later gap
// whose estimate fits, or to the final gap.
WeightUpdatePlan place_weight_updates(const Graph& g, const SubgraphTree& tree, const WeightUpdateConfig& cfg);

// Every branch where its gradient appears / in the final gap.
WeightUpdatePlan immediate_weight_updates(const SubgraphTree& tree);
WeightUpdatePlan deferred_weight_updates(const SubgraphTree& tree);

}  // namespace memplan

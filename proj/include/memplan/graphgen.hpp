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

#include <cstdint>
#include <string_view>

#include "memplan/graph.hpp"

namespace memplan {

enum class Arch { kMlp, kResidual, kTransformer };
enum class Optimizer { kSgd, kAdam };

Arch parse_arch(std::string_view text);
Optimizer parse_optimizer(std::string_view text);
std::string_view to_string(Arch arch);
std::string_view to_string(Optimizer opt);

struct TrainingSizes {
  Bytes activation = 4 * kMiB;
  Bytes parameter = 2 * kMiB;
  Bytes attention = 8 * kMiB;  // attention score maps
};

// Forward pass of `blocks` blocks, a loss, the matching backward pass and one
// weight-update branch per parameter (1 op for SGD, 4 for Adam). Per-block
// size multipliers are drawn from `seed`. Weight-update op names start with
// "<optimizer>/".
Graph gen_training_graph(Arch arch, int blocks, const TrainingSizes& sizes, Optimizer opt,
                         std::uint64_t seed);

struct RandomDagOptions {
  int ops = 8;
  double edge_density = 0.3;
  int max_size_mib = 8;  // tensor sizes are 1..max MiB
  std::uint64_t seed = 0;
};

// Ops are numbered in a topological order; each produces one or two tensors
// consumed by later ops with probability edge_density.
Graph gen_random_dag(const RandomDagOptions& options);

// A small random DAG on which least-increase greedy ordering is strictly
// worse than the optimum. Deterministic in `seed`.
Graph gen_greedy_trap(std::uint64_t seed);

// Four ops whose two orders peak at 120 MiB and 90 MiB.
Graph gen_diamond();

// Two-layer training step whose second layer has a large gradient with an
// Adam branch. Running that branch as soon as the gradient appears overlaps
// it with the first layer's activations; running it after the backward pass
// does not.
Graph gen_delay_scenario();

}  // namespace memplan

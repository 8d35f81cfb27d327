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


#include "memplan/graphgen.hpp"

#include <map>
#include <random>
#include <string>
#include <utility>

#include "memplan/ordering.hpp"

namespace memplan {

namespace {

// Raw engine output keeps generated graphs identical across standard
// library implementations.
std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }
bool chance(std::mt19937_64& rng, double p) { return static_cast<double>(rng() >> 11) * 0x1.0p-53 < p; }

struct FwdOp {
  std::string name;
  std::vector<TensorId> inputs;
  std::vector<TensorId> outputs;
  std::vector<TensorId> saved;  // kept for the backward op
  Bytes param = 0;
};

class TrainingBuilder {
 public:
  TensorId tensor(Bytes size) {
    sizes_.push_back(size);
    return static_cast<TensorId>(sizes_.size()) - 1;
  }

  TensorId op(std::string name, std::vector<TensorId> inputs, Bytes out_size, Bytes param,
              std::vector<TensorId> saved) {
    const TensorId out = tensor(out_size);
    fwd_.push_back({std::move(name), std::move(inputs), {out}, std::move(saved), param});
    return out;
  }

  // Saves the op's own output.
  TensorId op_saving_output(std::string name, std::vector<TensorId> inputs, Bytes out_size) {
    const TensorId out = op(std::move(name), std::move(inputs), out_size, 0, {});
    fwd_.back().saved = {out};
    return out;
  }

  Graph build(TensorId input, TensorId result, Optimizer opt) const {
    GraphBuilder b;
    std::vector<TensorId> id(sizes_.size());
    for (size_t t = 0; t < sizes_.size(); ++t) id[t] = b.add_tensor(sizes_[t]);

    b.add_op("input", OpKind::kForward, {}, {id[static_cast<size_t>(input)]});
    for (const auto& f : fwd_) {
      std::vector<TensorId> ins;
      for (TensorId t : f.inputs) ins.push_back(id[static_cast<size_t>(t)]);
      b.add_op(f.name, OpKind::kForward, ins, {id[static_cast<size_t>(f.outputs.front())]});
    }

    // Gradient pieces flowing into each forward tensor, one per consumer.
    std::map<TensorId, std::vector<TensorId>> pieces;
    const TensorId dy = b.add_tensor(sizes_[static_cast<size_t>(result)]);
    pieces[result].push_back(dy);
    b.add_op("loss", OpKind::kLoss, {id[static_cast<size_t>(result)]}, {dy});

    struct Update {
      std::string name;
      TensorId grad;
      Bytes size;
    };
    std::vector<Update> updates;
    for (auto it = fwd_.rbegin(); it != fwd_.rend(); ++it) {
      std::vector<TensorId> ins;
      for (TensorId t : it->outputs) {
        const auto p = pieces.find(t);
        if (p != pieces.end()) ins.insert(ins.end(), p->second.begin(), p->second.end());
      }
      if (ins.empty()) continue;
      for (TensorId t : it->saved) ins.push_back(id[static_cast<size_t>(t)]);
      std::vector<TensorId> outs;
      for (TensorId x : it->inputs) {
        if (x == input) continue;
        const TensorId dx = b.add_tensor(sizes_[static_cast<size_t>(x)]);
        pieces[x].push_back(dx);
        outs.push_back(dx);
      }
      if (it->param > 0) {
        const TensorId dw = b.add_tensor(it->param, TensorCategory::kGradient);
        outs.push_back(dw);
        updates.push_back({it->name, dw, it->param});
      }
      b.add_op(it->name + ".bwd", OpKind::kBackward, ins, outs);
    }

    for (const auto& u : updates) {
      if (opt == Optimizer::kSgd) {
        b.add_op("sgd/step/" + u.name, OpKind::kWeightUpdate, {u.grad}, {});
        continue;
      }
      const TensorId m = b.add_tensor(u.size, TensorCategory::kOptimizerState);
      const TensorId v = b.add_tensor(u.size, TensorCategory::kOptimizerState);
      const TensorId step = b.add_tensor(u.size, TensorCategory::kTemporaryBuffer);
      b.add_op("adam/m/" + u.name, OpKind::kWeightUpdate, {u.grad}, {m});
      b.add_op("adam/v/" + u.name, OpKind::kWeightUpdate, {u.grad}, {v});
      b.add_op("adam/step/" + u.name, OpKind::kWeightUpdate, {m, v}, {step});
      b.add_op("adam/apply/" + u.name, OpKind::kWeightUpdate, {step}, {});
    }
    return b.build();
  }

 private:
  std::vector<Bytes> sizes_;
  std::vector<FwdOp> fwd_;
};

TensorId mlp_block(TrainingBuilder& b, const std::string& p, TensorId x, Bytes act, Bytes param) {
  const TensorId h = b.op(p + "fc1", {x}, act, param, {x});
  const TensorId g = b.op(p + "gate", {x}, act, param, {x});
  return b.op(p + "mul", {h, g}, act, 0, {h, g});
}

TensorId residual_block(TrainingBuilder& b, const std::string& p, TensorId x, Bytes act, Bytes param) {
  const TensorId a = b.op(p + "conv1", {x}, act, param, {x});
  const TensorId r = b.op_saving_output(p + "relu", {a}, act);
  const TensorId c = b.op(p + "conv2", {r}, act, param, {r});
  const TensorId s = b.op(p + "proj", {x}, act, param, {x});
  return b.op(p + "add", {c, s}, act, 0, {});
}

TensorId transformer_block(TrainingBuilder& b, const std::string& p, TensorId x, Bytes act, Bytes param,
                           Bytes attn) {
  const TensorId n = b.op(p + "ln1", {x}, act, param / 8, {x});
  const TensorId q = b.op(p + "q", {n}, act, param, {n});
  const TensorId k = b.op(p + "k", {n}, act, param, {n});
  const TensorId v = b.op(p + "v", {n}, act, param, {n});
  const TensorId s = b.op(p + "scores", {q, k}, attn, 0, {q, k});
  const TensorId a = b.op_saving_output(p + "softmax", {s}, attn);
  const TensorId c = b.op(p + "ctx", {a, v}, act, 0, {a, v});
  const TensorId o = b.op(p + "proj", {c}, act, param, {c});
  const TensorId h = b.op(p + "add1", {x, o}, act, 0, {});
  const TensorId f = b.op(p + "ff1", {h}, 4 * act, 4 * param, {h});
  const TensorId e = b.op_saving_output(p + "gelu", {f}, 4 * act);
  const TensorId z = b.op(p + "ff2", {e}, act, 4 * param, {e});
  return b.op(p + "add2", {h, z}, act, 0, {});
}

}  // namespace

Arch parse_arch(std::string_view text) {
  if (text == "mlp") return Arch::kMlp;
  if (text == "residual") return Arch::kResidual;
  if (text == "transformer") return Arch::kTransformer;
  throw ConfigError("unknown architecture: " + std::string(text));
}

Optimizer parse_optimizer(std::string_view text) {
  if (text == "sgd") return Optimizer::kSgd;
  if (text == "adam") return Optimizer::kAdam;
  throw ConfigError("unknown optimizer: " + std::string(text));
}

std::string_view to_string(Arch arch) {
  switch (arch) {
    case Arch::kMlp:
      return "mlp";
    case Arch::kResidual:
      return "residual";
    case Arch::kTransformer:
      return "transformer";
  }
  return "?";
}

std::string_view to_string(Optimizer opt) { return opt == Optimizer::kSgd ? "sgd" : "adam"; }

Graph gen_training_graph(Arch arch, int blocks, const TrainingSizes& sizes, Optimizer opt,
                         std::uint64_t seed) {
  if (blocks < 1) throw ConfigError("blocks must be positive");
  if (sizes.activation <= 0 || sizes.parameter <= 0 || sizes.attention <= 0) {
    throw ConfigError("sizes must be positive");
  }
  std::mt19937_64 rng(seed);
  TrainingBuilder b;
  const TensorId input = b.tensor(sizes.activation);
  TensorId x = input;
  for (int i = 0; i < blocks; ++i) {
    const Bytes act = sizes.activation * static_cast<Bytes>(1 + draw(rng, 3));
    const Bytes param = sizes.parameter * static_cast<Bytes>(1 + draw(rng, 2));
    const std::string prefix = "b" + std::to_string(i) + ".";
    switch (arch) {
      case Arch::kMlp:
        x = mlp_block(b, prefix, x, act, param);
        break;
      case Arch::kResidual:
        x = residual_block(b, prefix, x, act, param);
        break;
      case Arch::kTransformer:
        x = transformer_block(b, prefix, x, act, param, sizes.attention);
        break;
    }
  }
  return b.build(input, x, opt);
}

Graph gen_random_dag(const RandomDagOptions& o) {
  if (o.ops < 0 || o.max_size_mib < 1 || o.edge_density < 0.0 || o.edge_density > 1.0) {
    throw ConfigError("invalid random graph options");
  }
  std::mt19937_64 rng(o.seed);
  std::vector<std::vector<TensorId>> inputs(static_cast<size_t>(o.ops));
  std::vector<std::vector<TensorId>> outputs(static_cast<size_t>(o.ops));
  GraphBuilder b;
  for (int i = 0; i < o.ops; ++i) {
    const int count = chance(rng, 0.25) ? 2 : 1;
    for (int k = 0; k < count; ++k) {
      const TensorId t = b.add_tensor(static_cast<Bytes>(1 + draw(rng, static_cast<std::uint64_t>(o.max_size_mib))) * kMiB);
      outputs[static_cast<size_t>(i)].push_back(t);
      for (int j = i + 1; j < o.ops; ++j) {
        if (chance(rng, o.edge_density)) inputs[static_cast<size_t>(j)].push_back(t);
      }
    }
  }
  for (int i = 0; i < o.ops; ++i) {
    b.add_op("n" + std::to_string(i), OpKind::kForward, inputs[static_cast<size_t>(i)],
             outputs[static_cast<size_t>(i)]);
  }
  return b.build();
}

Graph gen_greedy_trap(std::uint64_t seed) {
  for (std::uint64_t attempt = 0; attempt < 100000; ++attempt) {
    RandomDagOptions o;
    o.ops = 6 + static_cast<int>(attempt % 3);
    o.edge_density = 0.35;
    o.seed = seed * 1000003 + attempt;
    auto g = gen_random_dag(o);
    const auto p = make_ordering_problem(g);
    if (greedy_order(p).peak > exact_order(p).peak) return g;
  }
  throw InvariantError("no greedy trap found");
}

Graph gen_delay_scenario() {
  GraphBuilder b;
  const auto act = TensorCategory::kActivation;
  const auto tmp = TensorCategory::kTemporaryBuffer;
  const auto grad = TensorCategory::kGradient;
  const TensorId x0 = b.add_tensor(4 * kMiB, act);
  const TensorId a1 = b.add_tensor(16 * kMiB, act);
  const TensorId a2 = b.add_tensor(16 * kMiB, act);
  const TensorId dy = b.add_tensor(1 * kMiB, tmp);
  const TensorId dx2 = b.add_tensor(1 * kMiB, tmp);
  const TensorId g2 = b.add_tensor(32 * kMiB, grad);
  const TensorId g1 = b.add_tensor(1 * kMiB, grad);
  b.add_op("input", OpKind::kForward, {}, {x0});
  b.add_op("f1", OpKind::kForward, {x0}, {a1});
  b.add_op("f2", OpKind::kForward, {a1}, {a2});
  b.add_op("loss", OpKind::kLoss, {a2}, {dy});
  b.add_op("f2.bwd", OpKind::kBackward, {dy, a1, a2}, {dx2, g2});
  b.add_op("f1.bwd", OpKind::kBackward, {dx2, x0, a1}, {g1});
  for (const auto& [name, g] : {std::pair{std::string("f2"), g2}, std::pair{std::string("f1"), g1}}) {
    const Bytes size = b.tensor_size(g);
    const TensorId m = b.add_tensor(size, TensorCategory::kOptimizerState);
    const TensorId v = b.add_tensor(size, TensorCategory::kOptimizerState);
    const TensorId step = b.add_tensor(size, tmp);
    b.add_op("adam/m/" + name, OpKind::kWeightUpdate, {g}, {m});
    b.add_op("adam/v/" + name, OpKind::kWeightUpdate, {g}, {v});
    b.add_op("adam/step/" + name, OpKind::kWeightUpdate, {m, v}, {step});
    b.add_op("adam/apply/" + name, OpKind::kWeightUpdate, {step}, {});
  }
  return b.build();
}

Graph gen_diamond() {
  GraphBuilder b;
  const auto big = b.add_tensor(60 * kMiB);
  const auto small = b.add_tensor(20 * kMiB);
  const auto tb = b.add_tensor(40 * kMiB);
  const auto tc = b.add_tensor(10 * kMiB);
  b.add_op("A", OpKind::kForward, {}, {big, small});
  b.add_op("B", OpKind::kForward, {small}, {tb});
  b.add_op("C", OpKind::kForward, {big}, {tc});
  b.add_op("D", OpKind::kForward, {tb, tc}, {});
  return b.build();
}

}  // namespace memplan

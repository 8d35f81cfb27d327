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


#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "memplan/cli.hpp"
#include "memplan/graphgen.hpp"
#include "memplan/io.hpp"
#include "memplan/planner.hpp"
#include "memplan/simulator.hpp"

namespace py = pybind11;
using namespace memplan;

namespace {

PlannerConfig make_config(int node_limit, int layout_limit, double delay_radius,
                          const std::map<std::string, double>& alpha, int ops_per_step, double time_limit_order,
                          double time_limit_layout, int workers) {
  PlannerConfig cfg;
  cfg.node_limit = node_limit;
  cfg.layout_limit = layout_limit;
  cfg.weight_updates.delay_radius = delay_radius;
  if (!alpha.empty()) cfg.weight_updates.alpha = alpha;
  cfg.ops_per_step = ops_per_step;
  cfg.order_budget = std::chrono::duration<double>(time_limit_order);
  cfg.layout_budget = std::chrono::duration<double>(time_limit_layout);
  cfg.workers = workers;
  cfg.validate();
  return cfg;
}

py::dict row_dict(const BaselineRow& r) {
  py::dict d;
  d["order"] = r.order;
  d["layout"] = r.layout;
  d["theoretical_peak"] = r.theoretical_peak;
  d["capacity"] = r.capacity;
  d["fragmentation_pct"] = r.fragmentation_pct;
  d["tp_reduction_pct"] = r.tp_reduction_pct;
  d["capacity_reduction_pct"] = r.capacity_reduction_pct;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Memory planning for training graphs";

  auto input_error = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);
  (void)input_error;

  m.attr("MIB") = kMiB;

  m.def(
      "plan",
      [](const std::string& graph, int node_limit, int layout_limit, double delay_radius,
         const std::map<std::string, double>& alpha, int ops_per_step, double time_limit_order,
         double time_limit_layout, int workers) {
        const auto cfg = make_config(node_limit, layout_limit, delay_radius, alpha, ops_per_step, time_limit_order,
                                     time_limit_layout, workers);
        const auto g = parse_graph(graph);
        py::gil_scoped_release release;
        return plan_to_json(make_plan_document(g, plan(g, cfg)));
      },
      py::arg("graph"), py::arg("node_limit") = 20, py::arg("layout_limit") = 24, py::arg("delay_radius") = 2.0,
      py::arg("alpha") = std::map<std::string, double>{}, py::arg("ops_per_step") = 1,
      py::arg("time_limit_order") = 60.0, py::arg("time_limit_layout") = 60.0, py::arg("workers") = 1,
      "Plans a graph document (JSON text) and returns the plan document (JSON text).");

  m.def(
      "evaluate",
      [](const std::string& graph, const std::string& plan_text) {
        const auto g = parse_graph(graph);
        const auto doc = parse_plan(plan_text);
        const auto bound = bind_plan(g, doc);
        check_schedule(g, bound.schedule);
        py::dict d;
        py::list violations;
        for (const auto& v : validate_layout(g, bound.schedule, bound.layout)) violations.append(v.message);
        d["valid"] = violations.empty();
        d["violations"] = violations;
        if (violations.empty()) {
          const auto stats = recompute_stats(g, bound.schedule, bound.layout);
          d["theoretical_peak"] = stats.theoretical_peak;
          d["capacity"] = stats.capacity;
          d["fragmentation_pct"] = stats.fragmentation_pct;
          d["replay_peak"] = replay_static(g, bound.schedule, bound.layout).actual_peak;
        }
        return d;
      },
      py::arg("graph"), py::arg("plan"),
      "Checks a plan against its graph and recomputes its stats.");

  m.def(
      "compare",
      [](const std::string& graph, const std::vector<std::string>& baselines, int node_limit, int layout_limit,
         int workers) {
        const auto cfg = make_config(node_limit, layout_limit, 2.0, {}, 1, 60.0, 60.0, workers);
        const auto c = compare_baselines(parse_graph(graph), cfg, baselines);
        py::dict d;
        d["planner"] = row_dict(c.planner);
        py::list rows;
        for (const auto& r : c.rows) rows.append(row_dict(r));
        d["rows"] = rows;
        return d;
      },
      py::arg("graph"), py::arg("baselines") = std::vector<std::string>{}, py::arg("node_limit") = 20,
      py::arg("layout_limit") = 24, py::arg("workers") = 1, "Compares the planner with baseline orders and layouts.");

  m.def(
      "gen_training",
      [](const std::string& arch, int blocks, const std::string& optimizer, std::uint64_t seed) {
        return graph_to_json(gen_training_graph(parse_arch(arch), blocks, {}, parse_optimizer(optimizer), seed));
      },
      py::arg("arch") = "mlp", py::arg("blocks") = 2, py::arg("optimizer") = "sgd", py::arg("seed") = 0);

  m.def(
      "gen_random",
      [](int ops, double density, int max_size_mib, std::uint64_t seed) {
        RandomDagOptions o;
        o.ops = ops;
        o.edge_density = density;
        o.max_size_mib = max_size_mib;
        o.seed = seed;
        return graph_to_json(gen_random_dag(o));
      },
      py::arg("ops") = 8, py::arg("density") = 0.3, py::arg("max_size_mib") = 8, py::arg("seed") = 0);

  m.def("gen_diamond", [] { return graph_to_json(gen_diamond()); });
  m.def("gen_greedy_trap", [](std::uint64_t seed) { return graph_to_json(gen_greedy_trap(seed)); },
        py::arg("seed") = 0);
  m.def("gen_delay_scenario", [] { return graph_to_json(gen_delay_scenario()); });

  m.def("render_svg", [](const std::string& plan_text) { return render_svg(parse_plan(plan_text)); },
        py::arg("plan"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in process; returns (exit code, stdout, stderr).");
}

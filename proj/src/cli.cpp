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


#include "memplan/cli.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "memplan/graphgen.hpp"
#include "memplan/io.hpp"
#include "memplan/planner.hpp"
#include "memplan/simulator.hpp"

namespace memplan {

namespace {

struct PlannerFlags {
  int node_limit = 20;
  int layout_limit = 24;
  double delay_radius = 2.0;
  std::string alpha = "adam=3,sgd=1";
  int ops_per_step = 1;
  double time_limit_order = 60.0;
  double time_limit_layout = 60.0;
  int workers = 1;
};

void add_planner_flags(CLI::App* cmd, PlannerFlags& f) {
  cmd->add_option("--node-limit", f.node_limit, "Largest gap ordered exactly")->capture_default_str();
  cmd->add_option("--layout-limit", f.layout_limit, "Largest item group laid out exactly")->capture_default_str();
  cmd->add_option("--delay-radius", f.delay_radius, "Gradient/mean size ratio above which updates may wait")
      ->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "Optimizer footprint multiples, name=value[,name=value]")
      ->capture_default_str();
  cmd->add_option("--ops-per-step", f.ops_per_step, "Ops that may share a timestep")->capture_default_str();
  cmd->add_option("--time-limit-order", f.time_limit_order, "Seconds per exact ordering search")
      ->capture_default_str();
  cmd->add_option("--time-limit-layout", f.time_limit_layout, "Seconds per exact layout search")
      ->capture_default_str();
  cmd->add_option("--workers", f.workers, "Leaves solved in parallel")->capture_default_str();
}

std::map<std::string, double> parse_alpha(const std::string& text) {
  std::map<std::string, double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--alpha", "expected name=value, got '" + item + "'");
    try {
      std::size_t used = 0;
      const std::string value = item.substr(eq + 1);
      out[item.substr(0, eq)] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::logic_error&) {
      throw CLI::ValidationError("--alpha", "bad number in '" + item + "'");
    }
  }
  return out;
}

PlannerConfig to_config(const PlannerFlags& f) {
  PlannerConfig cfg;
  cfg.node_limit = f.node_limit;
  cfg.layout_limit = f.layout_limit;
  cfg.weight_updates.delay_radius = f.delay_radius;
  cfg.weight_updates.alpha = parse_alpha(f.alpha);
  cfg.ops_per_step = f.ops_per_step;
  cfg.order_budget = std::chrono::duration<double>(f.time_limit_order);
  cfg.layout_budget = std::chrono::duration<double>(f.time_limit_layout);
  cfg.workers = f.workers;
  cfg.validate();
  return cfg;
}

std::string mib(Bytes b) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(2) << static_cast<double>(b) / static_cast<double>(kMiB) << " MiB";
  return o.str();
}

std::string pct(double v) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(2) << v << "%";
  return o.str();
}

void write_report(std::ostream& os, const ExecutionPlan& p) {
  os << "theoretical peak  " << mib(p.stats.theoretical_peak) << " (" << p.stats.theoretical_peak << " bytes)\n";
  os << "capacity          " << mib(p.stats.capacity) << " (" << p.stats.capacity << " bytes)\n";
  os << "fragmentation     " << pct(p.stats.fragmentation_pct) << "\n";
  os << "optimal leaves    " << p.stats.optimal_leaves << "/" << p.stats.total_leaves << "\n";
  if (!p.weight_update_policy.empty()) os << "weight updates    " << p.weight_update_policy << "\n";
  os << std::left << std::setw(6) << "leaf" << std::setw(6) << "ops" << std::setw(7) << "items" << std::setw(14)
     << "order peak" << std::setw(8) << "order" << std::setw(8) << "layout" << std::setw(10) << "order s"
     << "layout s\n";
  for (const auto& l : p.leaves) {
    std::ostringstream os_t, ls_t;
    os_t << std::fixed << std::setprecision(3) << l.order_seconds;
    ls_t << std::fixed << std::setprecision(3) << l.layout_seconds;
    os << std::setw(6) << l.node << std::setw(6) << l.ops << std::setw(7) << l.items << std::setw(14)
       << mib(l.order_peak) << std::setw(8) << (l.order_optimal ? "exact" : "anytime") << std::setw(8)
       << (l.layout_optimal ? "exact" : "anytime") << std::setw(10) << os_t.str() << ls_t.str() << "\n";
  }
  os << std::right;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file(path, text);
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Memory planner for training graphs: operator order and static tensor offsets."};
  app.name("memplan");
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Seed for generated graphs")->capture_default_str();

  PlannerFlags pf;
  std::string graph_path, plan_path, out_path, report_path, trace_path, baselines, format = "table";

  auto* plan_cmd = app.add_subcommand("plan", "Order and lay out a graph");
  plan_cmd->add_option("--graph", graph_path, "Graph document")->required();
  plan_cmd->add_option("--out", out_path, "Plan document (default stdout)");
  plan_cmd->add_option("--report", report_path, "Text report (default stderr, or stdout when --out is a file)");
  add_planner_flags(plan_cmd, pf);

  auto* eval_cmd = app.add_subcommand("eval", "Check a plan against its graph and recompute stats");
  eval_cmd->add_option("--graph", graph_path, "Graph document")->required();
  eval_cmd->add_option("--plan", plan_path, "Plan document")->required();
  eval_cmd->add_option("--trace", trace_path, "Write the caching-allocator replay of the plan's order as JSONL");

  std::string kind = "training", arch = "mlp", optimizer = "sgd";
  int blocks = 2, ops = 8, max_size_mib = 8;
  double density = 0.3;
  auto* gen_cmd = app.add_subcommand("gen", "Write a generated graph document");
  gen_cmd->add_option("--kind", kind, "training, random, greedy-trap, diamond or delay")
      ->check(CLI::IsMember({"training", "random", "greedy-trap", "diamond", "delay"}))
      ->capture_default_str();
  gen_cmd->add_option("--arch", arch, "mlp, residual or transformer")
      ->check(CLI::IsMember({"mlp", "residual", "transformer"}))
      ->capture_default_str();
  gen_cmd->add_option("--blocks", blocks, "Blocks in a training graph")->capture_default_str();
  gen_cmd->add_option("--optimizer", optimizer, "sgd or adam")->check(CLI::IsMember({"sgd", "adam"}))->capture_default_str();
  gen_cmd->add_option("--ops", ops, "Ops in a random graph")->capture_default_str();
  gen_cmd->add_option("--density", density, "Edge probability in a random graph")->capture_default_str();
  gen_cmd->add_option("--max-size-mib", max_size_mib, "Largest tensor in a random graph")->capture_default_str();
  gen_cmd->add_option("--out", out_path, "Graph document (default stdout)");
  gen_cmd->add_option("--seed", seed, "Generator seed")->capture_default_str();

  auto* cmp_cmd = app.add_subcommand("compare", "Compare the planner with baseline orders and layouts");
  cmp_cmd->add_option("--graph", graph_path, "Graph document")->required();
  cmp_cmd->add_option("--baselines", baselines,
                      "Comma list of definition-order, greedy-order, llfb-layout, caching-allocator (default all)");
  cmp_cmd->add_option("--format", format, "table or json")->check(CLI::IsMember({"table", "json"}))->capture_default_str();
  add_planner_flags(cmp_cmd, pf);

  auto* viz_cmd = app.add_subcommand("viz", "Render a plan document as SVG");
  viz_cmd->add_option("--plan", plan_path, "Plan document")->required();
  viz_cmd->add_option("--out", out_path, "SVG file (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (plan_cmd->parsed()) {
      const auto cfg = to_config(pf);
      const auto g = parse_graph(read_file(graph_path));
      const auto p = plan(g, cfg);
      emit(out_path, plan_to_json(make_plan_document(g, p)), out);
      std::ostringstream report;
      write_report(report, p);
      if (!report_path.empty()) {
        write_file(report_path, report.str());
      } else {
        (out_path.empty() || out_path == "-" ? err : out) << report.str();
      }
    } else if (eval_cmd->parsed()) {
      const auto g = parse_graph(read_file(graph_path));
      const auto doc = parse_plan(read_file(plan_path));
      const auto bound = bind_plan(g, doc);
      check_schedule(g, bound.schedule);
      const auto violations = validate_layout(g, bound.schedule, bound.layout);
      if (!violations.empty()) {
        err << "plan is invalid (" << violations.size() << " violations):\n";
        for (const auto& v : violations) err << "  " << v.message << "\n";
        return kExitInput;
      }
      const auto stats = recompute_stats(g, bound.schedule, bound.layout);
      const auto replay = replay_static(g, bound.schedule, bound.layout);
      nlohmann::ordered_json j;
      j["theoretical_peak"] = stats.theoretical_peak;
      j["capacity"] = stats.capacity;
      j["fragmentation_pct"] = stats.fragmentation_pct;
      j["optimal_leaves"] = doc.stats.optimal_leaves;
      j["total_leaves"] = doc.stats.total_leaves;
      j["replay_peak"] = replay.actual_peak;
      out << j.dump(2) << "\n";
      if (!trace_path.empty()) {
        write_file(trace_path, trace_to_jsonl(g, replay_dynamic(g, bound.schedule).trace));
      }
      if (stats.theoretical_peak != doc.stats.theoretical_peak ||
          stats.fragmentation_pct != doc.stats.fragmentation_pct) {
        err << "stored stats disagree with the recomputed ones\n";
        return kExitInput;
      }
    } else if (gen_cmd->parsed()) {
      Graph g;
      if (kind == "training") {
        g = gen_training_graph(parse_arch(arch), blocks, {}, parse_optimizer(optimizer), seed);
      } else if (kind == "random") {
        RandomDagOptions o;
        o.ops = ops;
        o.edge_density = density;
        o.max_size_mib = max_size_mib;
        o.seed = seed;
        g = gen_random_dag(o);
      } else if (kind == "greedy-trap") {
        g = gen_greedy_trap(seed);
      } else if (kind == "diamond") {
        g = gen_diamond();
      } else {
        g = gen_delay_scenario();
      }
      emit(out_path, graph_to_json(g), out);
    } else if (cmp_cmd->parsed()) {
      const auto cfg = to_config(pf);
      const auto g = parse_graph(read_file(graph_path));
      const auto c = compare_baselines(g, cfg, split_list(baselines));
      if (format == "json") {
        auto row_json = [](const BaselineRow& r) {
          return nlohmann::ordered_json{{"order", r.order},
                                        {"layout", r.layout},
                                        {"theoretical_peak", r.theoretical_peak},
                                        {"capacity", r.capacity},
                                        {"fragmentation_pct", r.fragmentation_pct},
                                        {"tp_reduction_pct", r.tp_reduction_pct},
                                        {"capacity_reduction_pct", r.capacity_reduction_pct}};
        };
        nlohmann::ordered_json j;
        j["planner"] = row_json(c.planner);
        j["rows"] = nlohmann::ordered_json::array();
        for (const auto& r : c.rows) j["rows"].push_back(row_json(r));
        out << j.dump(2) << "\n";
      } else {
        out << std::left << std::setw(18) << "order" << std::setw(19) << "layout" << std::setw(14) << "Tp"
            << std::setw(14) << "capacity" << std::setw(8) << "frag" << std::setw(12) << "Tp saved"
            << "capacity saved\n";
        auto row = [&](const BaselineRow& r, bool planner) {
          out << std::setw(18) << r.order << std::setw(19) << r.layout << std::setw(14) << mib(r.theoretical_peak)
              << std::setw(14) << mib(r.capacity) << std::setw(8) << pct(r.fragmentation_pct) << std::setw(12)
              << (planner ? "-" : pct(r.tp_reduction_pct)) << (planner ? "-" : pct(r.capacity_reduction_pct))
              << "\n";
        };
        row(c.planner, true);
        for (const auto& r : c.rows) row(r, false);
        out << std::right;
      }
    } else if (viz_cmd->parsed()) {
      const auto doc = parse_plan(read_file(plan_path));
      if (doc.tensors.empty() && !doc.layout.empty()) {
        throw InputError("plan document has no \"tensors\" section to draw");
      }
      emit(out_path, render_svg(doc), out);
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace memplan

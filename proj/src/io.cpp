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


#include "memplan/io.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace memplan {

using nlohmann::ordered_json;

namespace {

template <typename T>
T field(const ordered_json& j, const char* name, const std::string& where) {
  if (!j.contains(name)) throw GraphError(where + " lacks \"" + name + "\"");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw GraphError(where + " has a malformed \"" + name + "\"");
  }
}

ordered_json parse_json(std::string_view text, const char* what) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

}  // namespace

Graph parse_graph(std::string_view text) {
  ordered_json doc;
  try {
    doc = parse_json(text, "graph document");
  } catch (const InputError& e) {
    throw GraphError(e.what());
  }
  if (!doc.is_object() || !doc.contains("ops") || !doc.contains("tensors") || !doc["ops"].is_array() ||
      !doc["tensors"].is_array()) {
    throw GraphError("graph document needs \"ops\" and \"tensors\" arrays");
  }
  std::vector<TensorInfo> tensors;
  std::unordered_map<std::int64_t, TensorId> tensor_index;
  for (const auto& t : doc["tensors"]) {
    const std::string where = "tensor #" + std::to_string(tensors.size());
    TensorInfo info;
    info.key = field<std::int64_t>(t, "id", where);
    info.size = field<Bytes>(t, "size_bytes", where);
    if (t.contains("category") && !t["category"].is_null()) {
      info.category = parse_tensor_category(field<std::string>(t, "category", where));
    }
    if (!tensor_index.emplace(info.key, static_cast<TensorId>(tensors.size())).second) {
      throw GraphError("duplicate tensor id " + std::to_string(info.key));
    }
    tensors.push_back(std::move(info));
  }
  std::vector<OpNode> ops;
  std::set<std::int64_t> op_keys;
  for (const auto& o : doc["ops"]) {
    const std::string where = "op #" + std::to_string(ops.size());
    OpNode op;
    op.key = field<std::int64_t>(o, "id", where);
    if (!op_keys.insert(op.key).second) throw GraphError("duplicate op id " + std::to_string(op.key));
    op.name = o.contains("name") ? field<std::string>(o, "name", where) : "op" + std::to_string(op.key);
    op.kind = parse_op_kind(field<std::string>(o, "kind", where));
    auto refs = [&](const char* name) {
      std::vector<TensorId> out;
      for (auto key : field<std::vector<std::int64_t>>(o, name, where)) {
        const auto it = tensor_index.find(key);
        if (it == tensor_index.end()) {
          throw GraphError("op '" + op.name + "' references unknown tensor " + std::to_string(key));
        }
        out.push_back(it->second);
      }
      return out;
    };
    op.inputs = refs("inputs");
    op.outputs = refs("outputs");
    ops.push_back(std::move(op));
  }
  return Graph(std::move(ops), std::move(tensors));
}

std::string graph_to_json(const Graph& g) {
  ordered_json doc;
  doc["ops"] = ordered_json::array();
  for (const auto& op : g.ops()) {
    ordered_json o;
    o["id"] = op.key;
    o["name"] = op.name;
    o["kind"] = std::string(to_string(op.kind));
    auto keys = [&](const std::vector<TensorId>& ids) {
      auto a = ordered_json::array();
      for (TensorId t : ids) a.push_back(g.tensor(t).key);
      return a;
    };
    o["inputs"] = keys(op.inputs);
    o["outputs"] = keys(op.outputs);
    doc["ops"].push_back(std::move(o));
  }
  doc["tensors"] = ordered_json::array();
  for (const auto& t : g.tensors()) {
    ordered_json o;
    o["id"] = t.key;
    o["size_bytes"] = t.size;
    if (t.category) o["category"] = std::string(to_string(*t.category));
    doc["tensors"].push_back(std::move(o));
  }
  return doc.dump(2) + "\n";
}

PlanDocument make_plan_document(const Graph& g, const ExecutionPlan& p) {
  PlanDocument doc;
  for (OpId v : p.schedule.order) doc.schedule.push_back(g.op(v).key);
  for (OpId v = 0; v < g.num_ops(); ++v) {
    doc.timesteps[g.op(v).key] = p.schedule.timestep_of[static_cast<size_t>(v)];
  }
  for (const auto& [t, off] : p.layout.offsets) doc.layout[g.tensor(t).key] = off;
  doc.capacity = p.layout.capacity;
  doc.ops_per_step = p.schedule.ops_per_step;
  doc.stats = p.stats;
  doc.weight_update_policy = p.weight_update_policy;
  doc.leaves = p.leaves;
  const auto categories = classify_tensors(g);
  const auto lifetimes = tensor_lifetimes(g, p.schedule);
  for (const auto& t : g.tensors()) {
    PlannedTensor pt;
    pt.id = t.key;
    pt.producer = t.producer == kNoOp ? std::string() : g.op(t.producer).name;
    pt.category = std::string(to_string(categories[static_cast<size_t>(t.id)]));
    pt.size = t.size;
    pt.live = lifetimes[static_cast<size_t>(t.id)];
    pt.offset = p.layout.offsets.at(t.id);
    doc.tensors.push_back(std::move(pt));
  }
  return doc;
}

std::string plan_to_json(const PlanDocument& doc) {
  ordered_json j;
  j["schedule"] = doc.schedule;
  j["timesteps"] = ordered_json::object();
  for (const auto& [k, t] : doc.timesteps) j["timesteps"][std::to_string(k)] = t;
  j["layout"] = ordered_json::object();
  for (const auto& [k, off] : doc.layout) j["layout"][std::to_string(k)] = off;
  j["capacity"] = doc.capacity;
  j["ops_per_step"] = doc.ops_per_step;
  j["stats"] = {{"theoretical_peak", doc.stats.theoretical_peak},
                {"capacity", doc.stats.capacity},
                {"fragmentation_pct", doc.stats.fragmentation_pct},
                {"optimal_leaves", doc.stats.optimal_leaves},
                {"total_leaves", doc.stats.total_leaves}};
  j["weight_update_policy"] = doc.weight_update_policy;
  j["leaves"] = ordered_json::array();
  for (const auto& l : doc.leaves) {
    j["leaves"].push_back({{"node", l.node},
                           {"ops", l.ops},
                           {"items", l.items},
                           {"order_peak", l.order_peak},
                           {"order_optimal", l.order_optimal},
                           {"layout_optimal", l.layout_optimal},
                           {"order_nodes", l.order_nodes},
                           {"layout_nodes", l.layout_nodes}});
  }
  j["tensors"] = ordered_json::array();
  for (const auto& t : doc.tensors) {
    j["tensors"].push_back({{"id", t.id},
                            {"producer", t.producer},
                            {"category", t.category},
                            {"size_bytes", t.size},
                            {"start", t.live.start},
                            {"end", t.live.end},
                            {"offset", t.offset}});
  }
  return j.dump(2) + "\n";
}

PlanDocument parse_plan(std::string_view text) {
  const auto j = parse_json(text, "plan document");
  PlanDocument doc;
  try {
    if (!j.is_object()) throw InputError("plan document must be an object");
    for (const char* key : {"schedule", "layout", "capacity"}) {
      if (!j.contains(key)) throw InputError(std::string("plan document lacks \"") + key + "\"");
    }
    doc.schedule = j.at("schedule").get<std::vector<std::int64_t>>();
    auto keyed = [](const ordered_json& obj, auto& out) {
      for (const auto& [k, v] : obj.items()) {
        std::size_t used = 0;
        std::int64_t key = 0;
        try {
          key = std::stoll(k, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != k.size()) throw InputError("plan document has non-integer id \"" + k + "\"");
        out[key] = v.template get<typename std::decay_t<decltype(out)>::mapped_type>();
      }
    };
    keyed(j.at("layout"), doc.layout);
    if (j.contains("timesteps")) {
      keyed(j.at("timesteps"), doc.timesteps);
    } else {
      for (size_t i = 0; i < doc.schedule.size(); ++i) doc.timesteps[doc.schedule[i]] = static_cast<int>(i);
    }
    doc.capacity = j.at("capacity").get<Bytes>();
    doc.ops_per_step = j.value("ops_per_step", 1);
    if (j.contains("stats")) {
      const auto& s = j.at("stats");
      doc.stats.theoretical_peak = s.value("theoretical_peak", Bytes{0});
      doc.stats.capacity = s.value("capacity", doc.capacity);
      doc.stats.fragmentation_pct = s.value("fragmentation_pct", 0.0);
      doc.stats.optimal_leaves = s.value("optimal_leaves", 0);
      doc.stats.total_leaves = s.value("total_leaves", 0);
    }
    doc.weight_update_policy = j.value("weight_update_policy", std::string());
    if (j.contains("leaves")) {
      for (const auto& l : j.at("leaves")) {
        LeafStats st;
        st.node = l.value("node", -1);
        st.ops = l.value("ops", 0);
        st.items = l.value("items", 0);
        st.order_peak = l.value("order_peak", Bytes{0});
        st.order_optimal = l.value("order_optimal", false);
        st.layout_optimal = l.value("layout_optimal", false);
        st.order_nodes = l.value("order_nodes", std::uint64_t{0});
        st.layout_nodes = l.value("layout_nodes", std::uint64_t{0});
        doc.leaves.push_back(st);
      }
    }
    if (j.contains("tensors")) {
      for (const auto& t : j.at("tensors")) {
        PlannedTensor pt;
        pt.id = t.at("id").get<std::int64_t>();
        pt.producer = t.value("producer", std::string());
        pt.category = t.value("category", std::string());
        pt.size = t.at("size_bytes").get<Bytes>();
        pt.live = {t.at("start").get<int>(), t.at("end").get<int>()};
        pt.offset = t.at("offset").get<Bytes>();
        doc.tensors.push_back(std::move(pt));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed plan document: ") + e.what());
  }
  return doc;
}

BoundPlan bind_plan(const Graph& g, const PlanDocument& doc) {
  std::unordered_map<std::int64_t, OpId> ops;
  for (const auto& op : g.ops()) ops.emplace(op.key, op.id);
  std::unordered_map<std::int64_t, TensorId> tensors;
  for (const auto& t : g.tensors()) tensors.emplace(t.key, t.id);

  BoundPlan out;
  out.schedule.ops_per_step = doc.ops_per_step;
  out.schedule.timestep_of.assign(static_cast<size_t>(g.num_ops()), -1);
  for (auto key : doc.schedule) {
    const auto it = ops.find(key);
    if (it == ops.end()) throw InputError("plan schedules unknown op " + std::to_string(key));
    out.schedule.order.push_back(it->second);
  }
  for (const auto& [key, step] : doc.timesteps) {
    const auto it = ops.find(key);
    if (it == ops.end()) throw InputError("plan gives a timestep for unknown op " + std::to_string(key));
    out.schedule.timestep_of[static_cast<size_t>(it->second)] = step;
  }
  for (const auto& [key, off] : doc.layout) {
    const auto it = tensors.find(key);
    if (it == tensors.end()) throw InputError("plan places unknown tensor " + std::to_string(key));
    out.layout.offsets[it->second] = off;
  }
  out.layout.capacity = doc.capacity;
  return out;
}

namespace {

std::string color_of(const std::string& category) {
  if (category == "activation") return "#d95f02";
  if (category == "gradient") return "#1b9e77";
  if (category == "optimizer_state") return "#7570b3";
  if (category == "weight") return "#e7298a";
  return "#66a61e";
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const PlanDocument& doc) {
  constexpr double kWidth = 960;
  constexpr double kHeight = 540;
  constexpr double kLeft = 80;
  constexpr double kTop = 30;
  constexpr double kRight = 170;
  constexpr double kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  int steps = 1;
  Bytes cap = std::max<Bytes>(doc.capacity, 1);
  for (const auto& t : doc.tensors) {
    steps = std::max(steps, t.live.end + 1);
    cap = std::max(cap, t.offset + t.size);
  }
  const double sx = plot_w / steps;
  const double sy = plot_h / static_cast<double>(cap);

  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  o << "<g id=\"tensors\">\n";
  for (const auto& t : doc.tensors) {
    const double x = kLeft + t.live.start * sx;
    const double w = t.live.length() * sx;
    const double y = kTop + plot_h - static_cast<double>(t.offset + t.size) * sy;
    const double h = static_cast<double>(t.size) * sy;
    o << "<rect class=\"tensor " << escape(t.category) << "\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << w
      << "\" height=\"" << h << "\" fill=\"" << color_of(t.category)
      << "\" fill-opacity=\"0.75\" stroke=\"black\" stroke-width=\"0.5\"><title>tensor " << t.id << " ("
      << escape(t.producer) << ", " << escape(t.category) << "): " << t.size << " bytes at " << t.offset
      << ", steps " << t.live.start << "-" << t.live.end << "</title></rect>\n";
  }
  o << "</g>\n";
  // Axes, capacity line and legend.
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
    << kTop + plot_h << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
    << "\" stroke=\"black\"/>\n";
  const double cap_y = kTop + plot_h - static_cast<double>(doc.capacity) * sy;
  o << "<line x1=\"" << kLeft << "\" y1=\"" << cap_y << "\" x2=\"" << kLeft + plot_w << "\" y2=\"" << cap_y
    << "\" stroke=\"red\" stroke-dasharray=\"4 3\"/>\n";
  o << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">timestep (0-"
    << steps - 1 << ")</text>\n";
  o << "<text x=\"15\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
    << kTop + plot_h / 2 << ")\">byte offset</text>\n";
  o << "<text x=\"" << kLeft - 5 << "\" y=\"" << cap_y + 4 << "\" text-anchor=\"end\">" << doc.capacity
    << "</text>\n";
  o << "<text x=\"" << kLeft - 5 << "\" y=\"" << kTop + plot_h << "\" text-anchor=\"end\">0</text>\n";
  double ly = kTop + 10;
  for (const char* c : {"activation", "temporary_buffer", "gradient", "optimizer_state", "weight"}) {
    o << "<rect x=\"" << kWidth - kRight + 20 << "\" y=\"" << ly - 10 << "\" width=\"12\" height=\"12\" fill=\""
      << color_of(c) << "\"/><text x=\"" << kWidth - kRight + 38 << "\" y=\"" << ly << "\">" << c << "</text>\n";
    ly += 20;
  }
  o << "</svg>\n";
  return o.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
  if (!out) throw InputError("failed writing " + path);
}

}  // namespace memplan

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


#include <unistd.h>

#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "memplan/cli.hpp"
#include "memplan/io.hpp"

using namespace memplan;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("memplan_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

}  // namespace

TEST_CASE("plan the diamond from the command line") {
  TempDir dir;
  REQUIRE(cli({"gen", "--kind", "diamond", "--out", dir / "g.json"}).code == 0);
  const auto r = cli({"plan", "--graph", dir / "g.json", "--out", dir / "p.json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("theoretical peak") != std::string::npos);
  const auto plan = nlohmann::json::parse(read_file(dir / "p.json"));
  CHECK(plan["stats"]["theoretical_peak"] == 90 * kMiB);
  CHECK(plan["capacity"] == 90 * kMiB);
  CHECK(plan["schedule"] == nlohmann::json::array({0, 2, 1, 3}));
  for (const char* key : {"schedule", "timesteps", "layout", "capacity", "stats", "tensors"}) CHECK(plan.contains(key));
}

TEST_CASE("eval rejects a plan with overlapping offsets") {
  TempDir dir;
  REQUIRE(cli({"gen", "--kind", "diamond", "--out", dir / "g.json"}).code == 0);
  REQUIRE(cli({"plan", "--graph", dir / "g.json", "--out", dir / "p.json"}).code == 0);
  auto plan = nlohmann::json::parse(read_file(dir / "p.json"));
  for (auto& [key, off] : plan["layout"].items()) off = 0;
  write_file(dir / "bad.json", plan.dump());
  const auto r = cli({"eval", "--graph", dir / "g.json", "--plan", dir / "bad.json"});
  CHECK(r.code == 2);
  CHECK(r.err.find("overlap") != std::string::npos);
}

TEST_CASE("gen, plan and eval agree on stats") {
  TempDir dir;
  for (const char* arch : {"mlp", "residual", "transformer"}) {
    REQUIRE(cli({"gen", "--arch", arch, "--blocks", "2", "--optimizer", "adam", "--seed", "3", "--out", dir / "g.json"})
                .code == 0);
    REQUIRE(cli({"plan", "--graph", dir / "g.json", "--out", dir / "p.json", "--report", dir / "r.txt"}).code == 0);
    const auto r = cli({"eval", "--graph", dir / "g.json", "--plan", dir / "p.json", "--trace", dir / "t.jsonl"});
    CAPTURE(arch);
    CHECK(r.code == 0);
    const auto stats = nlohmann::json::parse(r.out);
    const auto plan = nlohmann::json::parse(read_file(dir / "p.json"));
    CHECK(stats["theoretical_peak"] == plan["stats"]["theoretical_peak"]);
    CHECK(stats["capacity"] == plan["stats"]["capacity"]);
    CHECK(stats["fragmentation_pct"] == plan["stats"]["fragmentation_pct"]);
    CHECK_FALSE(read_file(dir / "t.jsonl").empty());
  }
}

TEST_CASE("worker count leaves plan documents byte-identical") {
  TempDir dir;
  REQUIRE(cli({"gen", "--arch", "transformer", "--blocks", "2", "--optimizer", "adam", "--out", dir / "g.json"}).code == 0);
  REQUIRE(cli({"plan", "--graph", dir / "g.json", "--workers", "1", "--node-limit", "6", "--out", dir / "a.json"}).code == 0);
  REQUIRE(cli({"plan", "--graph", dir / "g.json", "--workers", "8", "--node-limit", "6", "--out", dir / "b.json"}).code == 0);
  CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));
}

TEST_CASE("viz draws one rectangle per tensor") {
  TempDir dir;
  REQUIRE(cli({"gen", "--arch", "residual", "--blocks", "1", "--out", dir / "g.json"}).code == 0);
  REQUIRE(cli({"plan", "--graph", dir / "g.json", "--out", dir / "p.json"}).code == 0);
  REQUIRE(cli({"viz", "--plan", dir / "p.json", "--out", dir / "l.svg"}).code == 0);
  const auto svg = read_file(dir / "l.svg");
  const auto plan = nlohmann::json::parse(read_file(dir / "p.json"));
  size_t rects = 0;
  for (size_t at = svg.find("class=\"tensor"); at != std::string::npos; at = svg.find("class=\"tensor", at + 1)) ++rects;
  CHECK(rects == plan["tensors"].size());
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("class=\"tensor activation\"") != std::string::npos);
}

TEST_CASE("compare prints every requested baseline") {
  TempDir dir;
  REQUIRE(cli({"gen", "--kind", "diamond", "--out", dir / "g.json"}).code == 0);
  const auto r = cli({"compare", "--graph", dir / "g.json", "--baselines", "definition-order,llfb-layout", "--format", "json"});
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["rows"].size() == 1);
  CHECK(j["rows"][0]["tp_reduction_pct"] == doctest::Approx(25.0));
  CHECK(cli({"compare", "--graph", dir / "g.json", "--baselines", "nonsense"}).code == 2);
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(cli({}).code == 1);
  CHECK(cli({"plan"}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"plan", "--graph", dir / "missing.json"}).code == 2);
  write_file(dir / "junk.json", "{\"ops\": [");
  CHECK(cli({"plan", "--graph", dir / "junk.json"}).code == 2);
  write_file(dir / "cycle.json",
             R"({"ops":[{"id":0,"name":"a","kind":"forward","inputs":[1],"outputs":[0]},)"
             R"({"id":1,"name":"b","kind":"forward","inputs":[0],"outputs":[1]}],)"
             R"("tensors":[{"id":0,"size_bytes":4},{"id":1,"size_bytes":4}]})");
  CHECK(cli({"plan", "--graph", dir / "cycle.json"}).code == 2);
  REQUIRE(cli({"gen", "--kind", "diamond", "--out", dir / "g.json"}).code == 0);
  CHECK(cli({"plan", "--graph", dir / "g.json", "--workers", "0"}).code == 2);
  CHECK(cli({"plan", "--graph", dir / "g.json", "--alpha", "adam"}).code == 1);
  CHECK(cli({"plan", "--graph", dir / "g.json", "--node-limit", "abc"}).code == 1);
}

TEST_CASE("graph documents round-trip with their own ids") {
  const auto text = std::string(
      R"({"ops":[{"id":10,"name":"a","kind":"forward","inputs":[],"outputs":[7]},)"
      R"({"id":20,"name":"b","kind":"loss","inputs":[7],"outputs":[]}],)"
      R"("tensors":[{"id":7,"size_bytes":64,"category":"activation"}]})");
  const auto g = parse_graph(text);
  CHECK(g.num_ops() == 2);
  CHECK(g.op(1).key == 20);
  CHECK(g.tensor(0).key == 7);
  CHECK(parse_graph(graph_to_json(g)) == g);
  CHECK_THROWS_AS(parse_graph(R"({"ops":[{"id":0,"kind":"forward","inputs":[3],"outputs":[]}],"tensors":[]})"),
                  GraphError);
  CHECK_THROWS_AS(parse_graph(R"({"ops":[{"id":0,"kind":"sideways","inputs":[],"outputs":[]}],"tensors":[]})"),
                  GraphError);
}

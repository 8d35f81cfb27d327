# Copyright 2026 The memplan Authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json

import pytest

import memplan


def test_diamond_plan():
    doc = memplan.plan(memplan.gen_diamond())
    assert doc["stats"]["theoretical_peak"] == 90 * memplan.MIB
    assert doc["stats"]["fragmentation_pct"] == 0.0
    assert len(doc["schedule"]) == 4


def test_plan_round_trip_evaluates_clean():
    graph = memplan.gen_training("residual", 2, "adam", seed=3)
    doc = memplan.plan(graph)
    report = memplan.evaluate(graph, doc)
    assert report["valid"], report["violations"]
    assert report["theoretical_peak"] == doc["stats"]["theoretical_peak"]
    assert report["capacity"] == doc["capacity"]


def test_tampered_plan_is_rejected():
    graph = memplan.gen_diamond()
    doc = memplan.plan(graph)
    for key in doc["layout"]:
        doc["layout"][key] = 0
    report = memplan.evaluate(graph, doc)
    assert not report["valid"]
    assert any("overlap" in v for v in report["violations"])


def test_plans_do_not_depend_on_workers():
    graph = memplan.gen_training("transformer", 2, "sgd", seed=1)
    assert memplan.plan(graph, workers=1) == memplan.plan(graph, workers=4)


def test_compare_lists_baselines():
    result = memplan.compare(memplan.gen_random(ops=9, seed=2))
    assert result["rows"]
    for row in result["rows"]:
        assert row["theoretical_peak"] >= result["planner"]["theoretical_peak"]


def test_errors_map_to_python_exceptions():
    with pytest.raises(memplan.InputError):
        memplan.plan("{not json")
    with pytest.raises(ValueError):
        memplan.plan(memplan.gen_diamond(), node_limit=0)


def test_cli_in_process():
    code, out, _ = memplan.run_cli(["gen", "--kind", "diamond"])
    assert code == 0
    assert json.loads(out)["ops"]
    code, _, err = memplan.run_cli(["plan", "--graph", "/nonexistent.json"])
    assert code == 2
    assert err


def test_svg_has_one_rect_per_tensor():
    doc = memplan.plan(memplan.gen_diamond())
    svg = memplan.render_svg(json.dumps(doc))
    assert svg.count('class="tensor') == len(doc["tensors"])

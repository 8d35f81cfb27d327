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

"""Memory planning for training graphs.

Graphs and plans cross the boundary as JSON documents. The helpers here
accept either JSON text or already-decoded dicts and return dicts.
"""

import json

from memplan import _core
from memplan._core import MIB, InputError, InvariantError, render_svg, run_cli

__all__ = [
    "MIB",
    "InputError",
    "InvariantError",
    "compare",
    "evaluate",
    "gen_delay_scenario",
    "gen_diamond",
    "gen_greedy_trap",
    "gen_random",
    "gen_training",
    "plan",
    "render_svg",
    "run_cli",
]


def _text(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def plan(graph, **config):
    """Plans a graph; keyword arguments mirror the CLI planner flags."""
    return json.loads(_core.plan(_text(graph), **config))


def evaluate(graph, plan_doc):
    """Validates a plan against its graph and recomputes its stats."""
    return _core.evaluate(_text(graph), _text(plan_doc))


def compare(graph, baselines=(), **config):
    """Planner row plus one row per baseline order/layout pair."""
    return _core.compare(_text(graph), list(baselines), **config)


def gen_training(arch="mlp", blocks=2, optimizer="sgd", seed=0):
    return json.loads(_core.gen_training(arch, blocks, optimizer, seed))


def gen_random(ops=8, density=0.3, max_size_mib=8, seed=0):
    return json.loads(_core.gen_random(ops, density, max_size_mib, seed))


def gen_diamond():
    return json.loads(_core.gen_diamond())


def gen_greedy_trap(seed=0):
    return json.loads(_core.gen_greedy_trap(seed))


def gen_delay_scenario():
    return json.loads(_core.gen_delay_scenario())

# Copyright 2026 The lnspolicy Authors
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
"""Learned large neighborhood search for binary integer programs."""

from ._lnspolicy import (
    Actor,
    AdapterError,
    ConfigError,
    ContractError,
    DimensionError,
    Error,
    GenerationError,
    Instance,
    ParseError,
    TrainingError,
    clip_probs,
    evaluate,
    generate,
    generate_ca,
    generate_mc,
    generate_mis,
    generate_sc,
    initial_solution,
    log_prob,
    primal_gap,
    run_lns,
    sample_action,
    solve_lp,
    solve_subip,
    train,
    var_feature_width,
)

__all__ = [
    "Actor",
    "AdapterError",
    "ConfigError",
    "ContractError",
    "DimensionError",
    "Error",
    "GenerationError",
    "Instance",
    "ParseError",
    "TrainingError",
    "clip_probs",
    "evaluate",
    "generate",
    "generate_ca",
    "generate_mc",
    "generate_mis",
    "generate_sc",
    "initial_solution",
    "log_prob",
    "primal_gap",
    "run_lns",
    "sample_action",
    "solve_lp",
    "solve_subip",
    "train",
    "var_feature_width",
]

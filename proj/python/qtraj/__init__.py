# Copyright 2026 The qtraj Authors
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

"""Quantum trajectories for the adiabatic master equation."""

from ._core import (
    AnnealSchedule,
    BathSpec,
    ConfigError,
    IsingSpec,
    NumericalError,
    adiabatic_diagnostic,
    builtin_problem,
    builtin_problem_names,
    chain_problem,
    default_schedule,
    gamma_ohmic,
    hamiltonian,
    load_config,
    run_ensemble,
    solve_ame,
)

__all__ = [
    "AnnealSchedule",
    "BathSpec",
    "ConfigError",
    "IsingSpec",
    "NumericalError",
    "adiabatic_diagnostic",
    "builtin_problem",
    "builtin_problem_names",
    "chain_problem",
    "default_schedule",
    "gamma_ohmic",
    "hamiltonian",
    "load_config",
    "run_ensemble",
    "solve_ame",
]

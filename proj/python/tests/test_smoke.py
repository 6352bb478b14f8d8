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

import json
import math

import numpy as np
import pytest

import qtraj


def small_spec(n=2, t_f=20.0):
    spec = qtraj.chain_problem(n)
    spec.t_f = t_f
    return spec


def test_chain_problem_shape():
    spec = qtraj.chain_problem(3)
    assert spec.n == 3
    assert spec.dimension == 8
    assert spec.h[0] == 0.25
    assert all(j == -1.0 for _, _, j in spec.J)
    assert "chain8" in qtraj.builtin_problem_names()


def test_schedule_endpoints():
    sch = qtraj.default_schedule()
    a0, b0 = sch(0.0)
    a1, b1 = sch(1.0)
    assert a0 == pytest.approx(2 * math.pi)
    assert b0 == pytest.approx(0.0)
    assert a1 == pytest.approx(0.0)
    assert b1 == pytest.approx(2 * math.pi)
    custom = qtraj.AnnealSchedule([(0.0, 1.0, 0.0), (1.0, 0.0, 3.0)])
    assert custom(0.5) == pytest.approx((0.5, 1.5))


def test_hamiltonian_hermitian_and_ground_energy():
    spec = small_spec(3)
    h = qtraj.hamiltonian(spec, 0.0)
    assert np.allclose(h, h.T)
    # -A(0) sum sigma^x: ground energy -n A(0).
    assert np.linalg.eigvalsh(h)[0] == pytest.approx(-3 * 2 * math.pi)


def test_gamma_kms_vectorized():
    bath = qtraj.BathSpec.from_ghz(1e-3, 2.62, 4.0)
    w = np.linspace(0.1, 30.0, 50)
    up = qtraj.gamma_ohmic(-w, bath)
    down = qtraj.gamma_ohmic(w, bath)
    assert up.shape == w.shape
    np.testing.assert_allclose(up, np.exp(-bath.beta * w) * down, rtol=1e-12)


def test_ame_populations_are_probabilities():
    out = qtraj.solve_ame(small_spec(), qtraj.BathSpec.from_ghz(1e-3, 2.62), grid_points=11, levels=2)
    pops = out["populations"]
    assert pops.shape == (11, 2)
    assert pops[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(pops >= -1e-9)
    assert np.all(pops.sum(axis=1) <= 1.0 + 1e-9)
    assert out["max_trace_error"] < 1e-8


def test_closed_system_trajectories_match_ame():
    spec = small_spec()
    bath = qtraj.BathSpec.from_ghz(0.0, 2.62)
    ame = qtraj.solve_ame(spec, bath, grid_points=11)
    ens = qtraj.run_ensemble(spec, bath, trajectories=4, grid_points=11)
    assert all(len(log) == 0 for log in ens["jumps"])
    np.testing.assert_allclose(ens["mean"], ame["populations"], atol=1e-6)


def test_ensemble_reproducible_across_workers():
    spec = small_spec(t_f=30.0)
    bath = qtraj.BathSpec.from_ghz(2e-3, 2.62)
    kw = dict(trajectories=24, seed=7, grid_points=11, batch_size=8)
    a = qtraj.run_ensemble(spec, bath, workers=1, **kw)
    b = qtraj.run_ensemble(spec, bath, workers=3, **kw)
    np.testing.assert_array_equal(a["mean"], b["mean"])
    assert a["jumps"] == b["jumps"]
    assert sum(len(log) for log in a["jumps"]) > 0


def test_load_config_and_errors(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"problem": "chain8", "temperature_GHz": 2.62, "t_f_ns": 100.0, "coupling": "x"}))
    spec, bath = qtraj.load_config(str(cfg))
    assert spec.n == 8 and spec.t_f == 100.0
    assert len(bath.couplings) == 8 and all(axis == "x" for _, axis in bath.couplings)
    assert bath.beta == pytest.approx(1.0 / (2 * math.pi * 2.62))

    cfg.write_text(json.dumps({"problem": "chain8", "temperature_GHz": -1.0, "t_f_ns": 100.0}))
    with pytest.raises(ValueError, match="temperature_GHz"):
        qtraj.load_config(str(cfg))

# Copyright 2026 The covbridge Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      https://www.apache.org/licenses/LICENSE-2.0
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

import covbridge as cb

GOLDEN_Q0 = (3.0 + math.sqrt(5.0)) / 2.0


def scalar_problem(sigma_t=1.0, steps=2000):
    sys = cb.LtvSystem.brownian_scalar(1.0)
    grid = cb.build_time_grid(1.0, steps)
    sched = cb.compute_schedules(sys, grid)
    return sys, sched, np.eye(1), np.full((1, 1), sigma_t)


def test_time_grid():
    grid = cb.build_time_grid(1.0, 4)
    assert grid.nodes == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(cb.CovbridgeError) as info:
        cb.build_time_grid(0.0, 10)
    assert info.value.kind == "invalid-argument"


def test_golden_boundary_three_routes():
    sys, sched, s0, st = scalar_problem()
    closed = cb.closed_form_boundary(sched, s0, st, cb.Branch.minus)
    assert closed.q0[0, 0] == pytest.approx(GOLDEN_Q0, abs=1e-9)
    alt_pi = cb.alternate_boundary_pi(s0, st, sched.phi_T0, sched.m_TT, cb.Branch.minus)
    assert 1.0 / alt_pi[0, 0] == pytest.approx(GOLDEN_Q0, abs=1e-9)
    it = cb.boundary_via_iteration(s0, st, sched.phi_T0, sched.m_TT, np.eye(1))
    assert it.converged
    assert it.q0[0, 0] == pytest.approx(GOLDEN_Q0, abs=1e-9)


def test_inertial_bridge_reaches_target():
    sys = cb.LtvSystem.inertial(1.0)
    grid = cb.build_time_grid(1.0, 2000)
    sched = cb.compute_schedules(sys, grid)
    s0, st = np.eye(2), 0.25 * np.eye(2)
    sol = cb.solve_bridge(sys, sched, s0, st)
    assert np.linalg.norm(sol.sigma[-1] - st) <= 1e-6
    assert cb.verify_bridge(sol, s0, st, 1e-6)["passed"]
    # B' = [0 1], so the gain is the second row of Pi.
    np.testing.assert_allclose(sol.gain[7], sol.pi[7][1:2, :], rtol=0, atol=0)
    plus = cb.solve_bridge(sys, sched, s0, st, cb.Branch.plus)
    assert len(plus.singular_times) > 0


def test_simulation_and_entropy_checks():
    sys, sched, s0, st = scalar_problem()
    sol = cb.solve_bridge(sys, sched, s0, st)
    cfg = cb.SimConfig(paths=2000, seed=7, sim_steps=1000, record_stride=50)
    ens = cb.simulate_bridge(sys, sol, s0, cfg)
    cov = cb.empirical_covariance(ens, 1.0)
    assert abs(cov[0, 0] - 1.0) < 4 * math.sqrt(2 / 2000)
    phi_q = cb.closed_loop_transition(sys, sol)
    y_star = phi_q[-1] @ s0
    assert y_star[0, 0] == pytest.approx((GOLDEN_Q0 - 1) / GOLDEN_Q0, abs=1e-8)
    res, _ = cb.foc_residual(y_star, s0, st, sched.phi_T0, sched.m_TT)
    assert res <= 1e-6
    assert cb.joint_optimality_check(y_star, s0, st, sched.phi_T0, sched.m_TT)["passed"]
    assert cb.gaussian_kl(np.eye(2), np.eye(2)) == pytest.approx(0.0, abs=1e-15)


def test_config_and_cli_round_trip(tmp_path):
    assert "rlc" in cb.scenario_names()
    cfg = cb.scenario_config("inertial-pos-squeeze")
    np.testing.assert_array_equal(cfg.sigma_t, np.diag([0.05, 1.0]))
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    code, out, err = cb.run_command("solve", str(path), steps=500, out=str(tmp_path / "out"))
    assert code == 0, err
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["residuals"]["passed"]
    code, _, _ = cb.run_command("scenario", "no-such-scenario")
    assert code == 2
    with pytest.raises(cb.CovbridgeError):
        cb.load_config_text('{"system": {"kind": "scenario", "scenario": "inertial"},\n  "horizon": {"T": 1}, }')

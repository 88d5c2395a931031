"""Acceptance: the binding and the primary-language driver produce
elementwise-identical solutions through the same plugin, and solver
failures keep their core status codes."""

import math
import os
import subprocess
import sys
from contextlib import contextmanager

import numpy as np
import pytest

from oifcore import IvpSession, Status
from oifcore.bench.runner import time_grid

from oif import IVP, OifError, solve_vdp


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[criterion] {name}: FAIL", flush=True)
        raise
    print(f"[criterion] {name}: PASS", flush=True)


def _run_primary_cli(args, dump_path):
    env = {k: v for k, v in os.environ.items() if k != "OIF_IMPL_PATH"}
    cmd = [sys.executable, "-m", "oifcore.bench.cli", *args,
           "--repeats", "1", "--dump-solution", str(dump_path)]
    proc = subprocess.run(cmd, capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    return np.loadtxt(dump_path)


def _binding_burgers(n, t_final, steps):
    """Burgers via the binding, with the problem definition written the
    same way the primary driver writes it."""
    dx = (2.0 - 0.0) / n
    x = 0.0 + (np.arange(n) + 0.5) * dx
    u0 = 0.5 - 0.25 * np.sin(math.pi * x)

    def rhs(t, u, udot, context):
        alpha = np.max(np.abs(u))
        u_right = np.roll(u, -1)
        fhat = 0.5 * ((0.5 * u * u + 0.5 * u_right * u_right)
                      - alpha * (u_right - u))
        udot[:] = -(fhat - np.roll(fhat, 1)) / context
        return 0

    u = np.empty(n)
    with IVP("dopri5c") as solver:
        solver.set_initial_value(u0, 0.0)
        solver.set_rhs_fn(rhs)
        solver.set_tolerances(1e-6, 1e-12)
        solver.set_user_data(dx)
        for t in time_grid(0.0, t_final, steps):
            solver.integrate(t, u)
    return u


def test_burgers_dump_matches_primary_driver(tmp_path):
    with criterion("cross-language equivalence (Burgers N=1600)"):
        dump = tmp_path / "burgers_primary.txt"
        primary = _run_primary_cli(
            ["burgers", "--n", "1600", "--t-final", "2.0", "--steps", "100"],
            dump)
        binding = _binding_burgers(1600, 2.0, 100)
        assert primary.shape == binding.shape == (1600,)
        assert np.max(np.abs(primary - binding)) <= 1e-12
        # same plugin, same arithmetic: actually bit-identical
        assert np.array_equal(primary, binding)


def test_vdp_dump_matches_primary_driver(tmp_path):
    with criterion("cross-language equivalence (VdP mu=5)"):
        dump = tmp_path / "vdp_primary.txt"
        primary = _run_primary_cli(
            ["vdp", "--mu", "5", "--t-final", "30", "--steps", "100"],
            dump)
        ts, ys = solve_vdp(5.0, 30.0, "dopri5c")
        assert np.max(np.abs(primary - ys[-1])) <= 1e-12
        assert np.array_equal(primary, ys[-1])


def test_vdp_trajectory_matches_primary_gateway():
    """Full trajectory agreement with an in-process primary-gateway
    drive over the same time grid."""
    with criterion("cross-language equivalence (VdP trajectory)"):
        from oifcore.bench.problems import VdpProblem

        problem = VdpProblem(5.0, t_final=30.0)
        grid = time_grid(0.0, 30.0, 100)
        reference = np.empty((101, 2))
        reference[0] = problem.initial_state()
        with IvpSession("dopri5c") as session:
            session.set_initial_value(problem.initial_state(), 0.0)
            session.set_rhs_fn(problem.rhs)
            session.set_user_data(problem.user_data_address)
            session.set_integrator("dopri5", {"max_steps": 500})
            y = np.empty(2)
            for i, t in enumerate(grid, start=1):
                session.integrate(t, y)
                reference[i] = y

        ts, ys = solve_vdp(5.0, 30.0, "dopri5c")
        assert np.max(np.abs(ys - reference)) <= 1e-12


def test_stiffness_exception_carries_core_status():
    with criterion("stiffness exception code = core status"):
        with pytest.raises(OifError) as err:
            solve_vdp(1000.0, 3000.0, "dopri5c")
        assert err.value.code == Status.SOLVER_FAILURE
        assert err.value.code == int(Status.SOLVER_FAILURE)
        assert "stiff" in str(err.value)

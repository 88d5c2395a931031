import math

import numpy as np
import pytest

from oifcore import Status

from oif import OifError, solve_vdp, vdp_rhs


class TestRhs:
    def test_first_order_form(self):
        ydot = np.empty(2)
        vdp_rhs(0.0, np.array([2.0, 0.0]), ydot, 1000.0)
        assert ydot.tolist() == [0.0, -2.0]

    def test_harmonic_limit(self):
        ydot = np.empty(2)
        vdp_rhs(0.0, np.array([0.0, 1.0]), ydot, 0.0)
        assert ydot.tolist() == [1.0, 0.0]


class TestSolve:
    def test_stiff_parameter_raises_stiffness_error(self):
        with pytest.raises(OifError) as err:
            solve_vdp(1000.0, 3000.0, "dopri5c")
        assert err.value.code == Status.SOLVER_FAILURE
        assert "stiff" in str(err.value)

    def test_mild_parameter_returns_trajectory(self):
        ts, ys = solve_vdp(5.0, 30.0, "dopri5c")
        assert ts.shape == (101,)
        assert ys.shape == (101, 2)
        assert ts[0] == 0.0 and ts[-1] == 30.0
        assert ys[0].tolist() == [2.0, 0.0]
        assert np.all(np.isfinite(ys))
        # the limit cycle keeps |x| below the classical bound
        assert np.abs(ys[:, 0]).max() < 2.5

    def test_harmonic_oscillator_period(self):
        # mu = 0 reduces to x'' + x = 0: one full period returns to the
        # start within default-tolerance accuracy.
        ts, ys = solve_vdp(0.0, 2.0 * math.pi, "dopri5c", max_steps=0)
        assert abs(ys[-1, 0] - ys[0, 0]) <= 1e-3
        assert abs(ys[-1, 1] - ys[0, 1]) <= 1e-3

    def test_other_implementations_accepted(self):
        # the step-budget option only applies to the adaptive plugin
        ts, ys = solve_vdp(0.5, 1.0, "rk4", n_points=10)
        assert ys.shape == (11, 2)
        assert np.all(np.isfinite(ys))

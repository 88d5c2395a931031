"""Van der Pol demo: drive the oscillator through a named implementation
and collect the trajectory."""

from __future__ import annotations

import numpy as np

from ._ivp import IVP

__all__ = ["solve_vdp", "vdp_rhs"]


def vdp_rhs(t, y, ydot, mu):
    """First-order Van der Pol right-hand side; the context is the
    damping parameter itself."""
    y0 = y[0]
    y1 = y[1]
    ydot[0] = y1
    ydot[1] = mu * (1.0 - y0 * y0) * y1 - y0
    return 0


def solve_vdp(mu: float, t_final: float, impl_name: str, *,
              n_points: int = 100, max_steps: int = 500):
    """Integrate the Van der Pol oscillator from x(0)=2, x'(0)=0.

    Returns ``(ts, ys)``: sample times (including t=0) and the state at
    each, with ``n_points`` equally spaced targets.  With a stiff
    parameter (mu >> 1) and an explicit implementation the per-call step
    budget runs out and the solver failure surfaces as an exception.

    ``max_steps`` configures the adaptive "dopri5" integrator and is
    ignored for implementations that do not provide it (pass 0 to keep
    any plugin's default).
    """
    dt = t_final / n_points
    grid = [(i + 1) * dt for i in range(n_points - 1)]
    grid.append(t_final)

    y0 = np.array([2.0, 0.0])
    ts = np.empty(n_points + 1)
    ys = np.empty((n_points + 1, 2))
    ts[0] = 0.0
    ys[0] = y0
    with IVP(impl_name) as solver:
        solver.set_initial_value(y0, 0.0)
        solver.set_rhs_fn(vdp_rhs)
        solver.set_user_data(float(mu))
        if max_steps and impl_name == "dopri5c":
            solver.set_integrator("dopri5", {"max_steps": int(max_steps)})
        y = np.empty(2)
        for i, t in enumerate(grid, start=1):
            solver.integrate(t, y)
            ts[i] = t
            ys[i] = y
    return ts, ys

"""Benchmark problems: inviscid Burgers via method of lines, and the Van
der Pol oscillator.

Both right-hand sides follow the interface callback signature
``f(t, y, ydot, user_data) -> status`` with the scalar context (spatial
step, damping parameter) read from the user-data address.
"""

from __future__ import annotations

import ctypes as ct
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BurgersProblem", "VdpProblem", "burgers_rhs", "vdp_rhs",
    "lax_friedrichs_flux",
]


def lax_friedrichs_flux(a, b, alpha):
    """Interface flux 0.5*((a^2/2 + b^2/2) - alpha*(b - a)) for the
    scalar conservation law u_t + (u^2/2)_x = 0."""
    return 0.5 * ((0.5 * a * a + 0.5 * b * b) - alpha * (b - a))


def burgers_rhs(t, u, udot, user_data):
    """Semi-discrete Burgers right-hand side on a periodic grid.

    Fluxes use the global variant of the Lax-Friedrichs splitting: the
    dissipation speed alpha is the maximum of |u| over the whole state,
    recomputed on every call.  ``user_data`` is the address of a C double
    holding the cell width dx.
    """
    dx = ct.c_double.from_address(user_data).value
    alpha = np.max(np.abs(u))
    u_right = np.roll(u, -1)
    fhat = lax_friedrichs_flux(u, u_right, alpha)   # flux at i + 1/2
    udot[:] = -(fhat - np.roll(fhat, 1)) / dx
    return 0


def vdp_rhs(t, y, ydot, user_data):
    """Van der Pol oscillator in first-order form.

    ``user_data`` is the address of a C double holding the damping
    parameter mu.
    """
    mu = ct.c_double.from_address(user_data).value
    y0 = y[0]
    y1 = y[1]
    ydot[0] = y1
    ydot[1] = mu * (1.0 - y0 * y0) * y1 - y0
    return 0


@dataclass
class BurgersProblem:
    """u_t + (u^2/2)_x = 0 on x in [0, 2], periodic, u0 = 0.5 - 0.25 sin(pi x),
    discretized on n finite-volume cells."""

    n: int
    t_final: float = 2.0
    x_left: float = 0.0
    x_right: float = 2.0
    _dx_box: ct.c_double = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least 2 cells")
        self._dx_box = ct.c_double(self.dx)

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.n

    @property
    def cell_centers(self) -> np.ndarray:
        return self.x_left + (np.arange(self.n) + 0.5) * self.dx

    def initial_state(self) -> np.ndarray:
        return 0.5 - 0.25 * np.sin(math.pi * self.cell_centers)

    @property
    def t0(self) -> float:
        return 0.0

    @property
    def rhs(self):
        return burgers_rhs

    @property
    def user_data_address(self) -> int:
        return ct.addressof(self._dx_box)

    def mass(self, u: np.ndarray) -> float:
        return float(np.sum(u) * self.dx)


@dataclass
class VdpProblem:
    """x'' - mu (1 - x^2) x' + x = 0 as a first-order system, started at
    x(0) = 2 with zero initial velocity."""

    mu: float
    t_final: float = 3000.0
    _mu_box: ct.c_double = field(init=False, repr=False)

    def __post_init__(self):
        self._mu_box = ct.c_double(float(self.mu))

    def initial_state(self) -> np.ndarray:
        return np.array([2.0, 0.0])

    @property
    def t0(self) -> float:
        return 0.0

    @property
    def rhs(self):
        return vdp_rhs

    @property
    def user_data_address(self) -> int:
        return ct.addressof(self._mu_box)

"""Benchmark execution: timed integration runs over the mediator path
(OIF) or a direct statically-bound path (RAW), with confidence-interval
statistics and CSV output.

Timing covers the integrate loop only; session setup, plugin loading,
and teardown stay outside the clock.  Every timed series is preceded by
one untimed warm-up run.
"""

from __future__ import annotations

import csv
import ctypes as ct
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import native
from ..errors import OifError, Status
from ..ivp import IvpSession
from ..marshal import OIFArrayF64, Callback, ConfigDict, callback_from_python
from .problems import BurgersProblem, VdpProblem

__all__ = [
    "stats", "RuntimeSample", "CaseResult", "RawSolver", "time_grid",
    "run_case", "run_rhs_micro", "write_csv", "dump_solution",
    "CSV_HEADER",
]

CSV_HEADER = ["case", "path", "impl", "param", "mean_s", "ci95_s", "status"]

#: Implementations available to the RAW path (directly bound, no dispatch).
RAW_IMPLS = ("dopri5c", "rk4")

_Z95 = 1.96


def stats(runs) -> tuple[float, float, float]:
    """Sample mean, standard error of the mean, and 95% half-width.

    se = sqrt( sum((r_i - mean)^2) / (n (n - 1)) ),  half-width = 1.96 se.
    Exact summation makes the result independent of input order.
    """
    runs = [float(r) for r in runs]
    n = len(runs)
    if n < 2:
        raise OifError(Status.INVALID_ARGUMENT,
                       f"need at least 2 runs for a standard error, got {n}")
    mean = math.fsum(runs) / n
    se = math.sqrt(math.fsum((r - mean) ** 2 for r in runs) / (n * (n - 1)))
    return mean, se, _Z95 * se


@dataclass
class RuntimeSample:
    """Wall-clock sample over repeated runs, reported as mean +- ci95.

    With a single run only the mean is defined; the half-width needs
    n >= 2."""

    runs: list[float]

    @property
    def n(self) -> int:
        return len(self.runs)

    @property
    def mean(self) -> float:
        return math.fsum(self.runs) / len(self.runs)

    @property
    def se(self) -> float:
        return stats(self.runs)[1]

    @property
    def ci95(self) -> float:
        return stats(self.runs)[2]

    def __str__(self) -> str:
        if self.n < 2:
            return f"{self.mean:.6f} s (n=1)"
        return f"{self.mean:.6f} +- {self.ci95:.6f} s (n={self.n})"


@dataclass
class CaseResult:
    case: str
    path: str
    impl: str
    param: object
    sample: RuntimeSample | None
    status: int
    message: str = ""
    solution: np.ndarray | None = None

    def csv_row(self) -> list:
        if self.sample is None:
            return [self.case, self.path, self.impl, self.param, "", "",
                    self.status]
        ci95 = f"{self.sample.ci95:.9f}" if self.sample.n >= 2 else ""
        return [self.case, self.path, self.impl, self.param,
                f"{self.sample.mean:.9f}", ci95, self.status]


def time_grid(t0: float, t_final: float, steps: int) -> list[float]:
    """Integration targets t0 + (i+1) dt, with the last point pinned to
    t_final exactly."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    dt = (t_final - t0) / steps
    grid = [t0 + (i + 1) * dt for i in range(steps - 1)]
    grid.append(t_final)
    return grid


class RawSolver:
    """Directly bound driver for a bundled plugin.

    Calls the plugin's entry points through static ctypes bindings with
    no manifest lookup, no dispatch table, and no argument packing: the
    baseline against which the mediator overhead is measured.
    """

    def __init__(self, impl_name: str):
        if impl_name not in RAW_IMPLS:
            raise OifError(Status.NOT_FOUND,
                           f"raw path supports {RAW_IMPLS}, not '{impl_name}'")
        source, libname = native.BUNDLED_PLUGINS[impl_name]
        lib_path = native.default_impl_root() / "ivp" / impl_name / libname
        self.impl_name = impl_name
        self._lib = ct.CDLL(str(lib_path))
        self._lib.oif_ivp_create.restype = ct.c_void_p
        self._lib.oif_ivp_last_error.restype = ct.c_char_p
        self._lib.oif_ivp_last_error.argtypes = [ct.c_void_p]
        self._session = ct.c_void_p(self._lib.oif_ivp_create())
        if not self._session:
            raise OifError(Status.PLUGIN_FAILURE, "plugin create failed")
        self._keepalive: list = []

    def close(self) -> None:
        if self._session:
            self._lib.oif_ivp_destroy(self._session)
            self._session = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _check(self, status: int) -> int:
        if status != 0:
            msg = self._lib.oif_ivp_last_error(self._session)
            raise OifError(status, msg.decode() if msg else "plugin failure")
        return status

    @staticmethod
    def _struct_for(a: np.ndarray):
        dims = (ct.c_ssize_t * 1)(a.shape[0])
        struct = OIFArrayF64(1, dims,
                             a.ctypes.data_as(ct.POINTER(ct.c_double)))
        return struct, dims

    def set_initial_value(self, y0: np.ndarray, t0: float) -> int:
        struct, dims = self._struct_for(y0)
        return self._check(self._lib.oif_ivp_set_initial_value(
            self._session, ct.byref(struct), ct.c_double(t0)))

    def set_rhs_fn(self, rhs) -> int:
        cb = rhs if isinstance(rhs, Callback) else callback_from_python(rhs)
        self._keepalive.append(cb)
        return self._check(self._lib.oif_ivp_set_rhs_fn(self._session,
                                                        cb.trampoline))

    def set_tolerances(self, reltol: float, abstol: float) -> int:
        return self._check(self._lib.oif_ivp_set_tolerances(
            self._session, ct.c_double(reltol), ct.c_double(abstol)))

    def set_user_data(self, address: int) -> int:
        return self._check(self._lib.oif_ivp_set_user_data(
            self._session, ct.c_void_p(address)))

    def set_integrator(self, name: str, params=None) -> int:
        cfg = params if isinstance(params, ConfigDict) else ConfigDict(params)
        wire = cfg.to_wire()
        buf = ct.create_string_buffer(wire, len(wire)) if wire else None
        return self._check(self._lib.oif_ivp_set_integrator(
            self._session, name.encode(), buf, ct.c_size_t(len(wire))))

    def prepare_output(self, y: np.ndarray):
        """Prebuild the output struct once; reused across integrate calls."""
        struct, dims = self._struct_for(y)
        self._keepalive.extend((y, dims))
        return struct

    def integrate_into(self, t: float, struct) -> int:
        return self._check(self._lib.oif_ivp_integrate(
            self._session, ct.c_double(t), ct.byref(struct)))


def _problem_pieces(problem):
    if isinstance(problem, BurgersProblem):
        return ("burgers", problem.n, problem.initial_state(), problem.rhs,
                problem.user_data_address, problem.t0, problem.t_final)
    if isinstance(problem, VdpProblem):
        return ("vdp", problem.mu, problem.initial_state(), problem.rhs,
                problem.user_data_address, problem.t0, problem.t_final)
    raise TypeError(f"unsupported problem {type(problem).__name__}")


def _integrator_options(impl: str, max_steps: int | None):
    if max_steps is None:
        return None
    if impl != "dopri5c":
        raise OifError(Status.INVALID_ARGUMENT,
                       f"max_steps is a dopri5 option; '{impl}' does not "
                       f"accept it")
    return ("dopri5", ConfigDict({"max_steps": int(max_steps)}))


def _one_run_oif(impl, problem, grid, reltol, abstol, integrator
                 ) -> tuple[float, np.ndarray]:
    case, param, y0, rhs, user_data, t0, _ = _problem_pieces(problem)
    y = np.empty_like(y0)
    with IvpSession(impl) as session:
        session.set_initial_value(y0, t0)
        session.set_rhs_fn(rhs)
        session.set_tolerances(reltol, abstol)
        session.set_user_data(user_data)
        if integrator is not None:
            session.set_integrator(*integrator)
        tic = time.perf_counter()
        for t in grid:
            session.integrate(t, y)
        elapsed = time.perf_counter() - tic
    return elapsed, y


def _one_run_raw(impl, problem, grid, reltol, abstol, integrator
                 ) -> tuple[float, np.ndarray]:
    case, param, y0, rhs, user_data, t0, _ = _problem_pieces(problem)
    y = np.empty_like(y0)
    with RawSolver(impl) as solver:
        solver.set_initial_value(y0, t0)
        solver.set_rhs_fn(rhs)
        solver.set_tolerances(reltol, abstol)
        solver.set_user_data(user_data)
        if integrator is not None:
            solver.set_integrator(*integrator)
        out = solver.prepare_output(y)
        tic = time.perf_counter()
        for t in grid:
            solver.integrate_into(t, out)
        elapsed = time.perf_counter() - tic
    return elapsed, y


def run_case(user_path: str, impl: str, problem, repeats: int = 30, *,
             steps: int = 100, reltol: float = 1e-6, abstol: float = 1e-12,
             max_steps: int | None = None) -> CaseResult:
    """Time ``repeats`` integrations of ``problem`` through one path.

    A solver failure is recorded in the result's status instead of a
    timing.  The returned solution is the final state vector of the last
    completed run.
    """
    if user_path not in ("oif", "raw"):
        raise ValueError("user_path must be 'oif' or 'raw'")
    case, param, _, _, _, t0, t_final = _problem_pieces(problem)
    grid = time_grid(t0, t_final, steps)
    one_run = _one_run_oif if user_path == "oif" else _one_run_raw
    integrator = _integrator_options(impl, max_steps)
    try:
        _, solution = one_run(impl, problem, grid, reltol, abstol,
                              integrator)   # warm-up, untimed
        runs = []
        for _ in range(repeats):
            elapsed, solution = one_run(impl, problem, grid, reltol, abstol,
                                        integrator)
            runs.append(elapsed)
    except OifError as exc:
        return CaseResult(case, user_path, impl, param, None, exc.status,
                          str(exc))
    return CaseResult(case, user_path, impl, param, RuntimeSample(runs),
                      0, solution=solution)


def run_rhs_micro(n: int = 6400, evals: int = 10000, repeats: int = 30
                  ) -> CaseResult:
    """Time ``evals`` direct evaluations of the Burgers RHS at resolution
    ``n``, repeated ``repeats`` times."""
    problem = BurgersProblem(n)
    u = problem.initial_state()
    udot = np.empty_like(u)
    user_data = problem.user_data_address
    rhs = problem.rhs
    runs = []
    for rep in range(repeats + 1):          # first pass is the warm-up
        tic = time.perf_counter()
        for _ in range(evals):
            rhs(0.0, u, udot, user_data)
        elapsed = time.perf_counter() - tic
        if rep > 0:
            runs.append(elapsed)
    return CaseResult("rhs-micro", "direct", "python", n,
                      RuntimeSample(runs), 0)


def write_csv(path, results) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for result in results:
            writer.writerow(result.csv_row())


def dump_solution(path, y: np.ndarray) -> None:
    """One float per line, printed with round-trip precision."""
    with open(path, "w") as fh:
        for v in np.asarray(y, dtype=np.float64).ravel():
            fh.write(f"{v:.17g}\n")

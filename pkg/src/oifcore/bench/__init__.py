"""Benchmark driver package (problems, timed runner, CLI)."""

from .problems import BurgersProblem, VdpProblem, burgers_rhs, vdp_rhs
from .runner import (
    CaseResult, RawSolver, RuntimeSample, dump_solution, run_case,
    run_rhs_micro, stats, time_grid, write_csv,
)

__all__ = [
    "BurgersProblem", "VdpProblem", "burgers_rhs", "vdp_rhs",
    "CaseResult", "RawSolver", "RuntimeSample", "dump_solution",
    "run_case", "run_rhs_micro", "stats", "time_grid", "write_csv",
]

"""LP and mixed-binary solving.

Two backends share one interface: ``"native"`` (the in-tree revised simplex
and branch-and-bound) and ``"highs"`` (scipy's HiGHS bindings).
"""
from __future__ import annotations

from .bnb import solve_mip_bnb
from .highs import solve_lp_highs, solve_mip_highs
from .lpfile import read_lp, write_lp
from .model import (EQ, GE, LE, TOL, LinearProgram, LpSolution, MipSolution, Tolerances,
                    dual_objective)
from .simplex import solve_lp_simplex

BACKENDS = ("native", "highs")


def solve_lp(lp: LinearProgram, backend: str = "native", lo=None, hi=None) -> LpSolution:
    if backend == "native":
        return solve_lp_simplex(lp, lo=lo, hi=hi)
    if backend == "highs":
        return solve_lp_highs(lp, lo=lo, hi=hi)
    raise ValueError(f"unknown backend {backend!r}")


def solve_mip(lp: LinearProgram, gap: float = 0.0, backend: str = "native", max_nodes: int = 200_000,
              time_limit: float | None = None) -> MipSolution:
    if backend == "native":
        return solve_mip_bnb(lp, gap=gap, max_nodes=max_nodes, time_limit=time_limit)
    if backend == "highs":
        return solve_mip_highs(lp, gap=gap, time_limit=time_limit)
    raise ValueError(f"unknown backend {backend!r}")


__all__ = ["BACKENDS", "EQ", "GE", "LE", "TOL", "LinearProgram", "LpSolution", "MipSolution",
           "Tolerances", "dual_objective", "read_lp", "solve_lp", "solve_lp_highs",
           "solve_lp_simplex", "solve_mip", "solve_mip_bnb", "solve_mip_highs", "write_lp"]

"""Branch-and-bound over binary columns.

Most-fractional branching, depth-first dives that restart from the best
open bound when a dive ends.  Ties resolve to the lowest column id so a
run is fully deterministic.
"""
from __future__ import annotations

import heapq
import time
from typing import Callable

import numpy as np

from .model import TOL, LinearProgram, LpSolution, MipSolution, Tolerances
from .simplex import solve_lp_simplex

LpSolver = Callable[[LinearProgram, np.ndarray, np.ndarray], LpSolution]


def _default_lp(lp, lo, hi):
    return solve_lp_simplex(lp, lo=lo, hi=hi)


def _within_gap(incumbent: float, bound: float, gap: float) -> bool:
    return incumbent - bound <= gap * abs(bound) + 1e-9 * (1.0 + abs(incumbent))


def solve_mip_bnb(lp: LinearProgram, gap: float = 0.0, max_nodes: int = 200_000,
                  time_limit: float | None = None, tol: Tolerances = TOL,
                  lp_solver: LpSolver | None = None) -> MipSolution:
    """Solve a mixed-binary program.

    The relative gap is measured against the bound: on return
    ``objective - bound <= gap * |bound|`` unless a budget was exhausted,
    in which case the best incumbent and the honest bound are returned.
    """
    if gap < 0:
        raise ValueError("gap must be >= 0")
    lp_solver = lp_solver or _default_lp
    _, _, _, _, lo0, hi0, is_bin = lp.arrays()
    bins = np.flatnonzero(is_bin)
    t0 = time.perf_counter()

    best_x, best_obj = None, np.inf
    heap: list = []
    seq = 0
    current = (-np.inf, lo0.copy(), hi0.copy())
    nodes = 0
    trace: list[float] = []
    status = None

    def global_bound():
        b = [e[0] for e in heap]
        if current is not None:
            b.append(current[0])
        return min(min(b), best_obj) if b else best_obj

    while current is not None or heap:
        if current is None:
            bound, _, lo, hi = heapq.heappop(heap)
            current = (bound, lo, hi)
        bound, lo, hi = current
        if best_x is not None and _within_gap(best_obj, bound, gap):
            current = None
            trace.append(global_bound())
            continue
        if nodes >= max_nodes or (time_limit is not None and time.perf_counter() - t0 > time_limit):
            status = "node_limit" if nodes >= max_nodes else "time_limit"
            break
        sol = lp_solver(lp, lo, hi)
        nodes += 1
        if sol.status == "unbounded" and nodes == 1:
            return MipSolution("unbounded", nodes=nodes)
        if sol.status == "numerics" and nodes == 1:
            return MipSolution("numerics", nodes=nodes)
        if sol.status != "optimal":
            current = None
            trace.append(global_bound())
            continue
        val = max(sol.objective, bound)
        if best_x is not None and _within_gap(best_obj, val, gap):
            current = None
            trace.append(global_bound())
            continue
        xb = sol.x[bins]
        frac = np.minimum(xb - np.floor(xb), np.ceil(xb) - xb)
        if bins.size == 0 or frac.max() <= tol.integrality:
            x = sol.x.copy()
            x[bins] = np.round(x[bins])
            obj = lp.objective_value(x)
            if obj < best_obj:
                best_x, best_obj = x, obj
            current = None
            trace.append(global_bound())
            continue
        k = int(np.argmax(frac))
        j = int(bins[k])
        lo_dn, hi_dn = lo.copy(), hi.copy()
        hi_dn[j] = 0.0
        lo_up, hi_up = lo.copy(), hi.copy()
        lo_up[j] = 1.0
        up_first = sol.x[j] >= 0.5
        dive, other = ((val, lo_up, hi_up), (val, lo_dn, hi_dn)) if up_first else \
            ((val, lo_dn, hi_dn), (val, lo_up, hi_up))
        heapq.heappush(heap, (other[0], seq, other[1], other[2]))
        seq += 1
        current = dive
        trace.append(global_bound())

    if status is None:
        if best_x is None:
            return MipSolution("infeasible", nodes=nodes, bound_trace=trace)
        final_bound = global_bound()
        return MipSolution("optimal", x=best_x, objective=best_obj, bound=min(final_bound, best_obj),
                           nodes=nodes, bound_trace=trace)
    return MipSolution(status, x=best_x, objective=best_obj, bound=global_bound(), nodes=nodes,
                       bound_trace=trace)

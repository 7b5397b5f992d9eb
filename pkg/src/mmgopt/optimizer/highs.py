"""Adapters onto scipy's HiGHS interfaces, used as an alternate backend."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .model import EQ, GE, LE, LinearProgram, LpSolution, MipSolution


def solve_lp_highs(lp: LinearProgram, lo=None, hi=None) -> LpSolution:
    A, sense, b, c, lo0, hi0, _ = lp.arrays()
    lo = lo0 if lo is None else np.asarray(lo, float)
    hi = hi0 if hi is None else np.asarray(hi, float)
    le, ge, eq = sense == LE, sense == GE, sense == EQ
    A_ub = sp.vstack([A[le], -A[ge]]).tocsr()
    b_ub = np.concatenate([b[le], -b[ge]])
    kw = {}
    if A_ub.shape[0]:
        kw.update(A_ub=A_ub, b_ub=b_ub)
    if eq.any():
        kw.update(A_eq=A[eq], b_eq=b[eq])
    res = linprog(c, bounds=np.column_stack([lo, hi]), method="highs", **kw)
    if res.status == 2:
        return LpSolution("infeasible")
    if res.status == 3:
        return LpSolution("unbounded")
    if res.status != 0:
        return LpSolution("iteration_limit" if res.status == 1 else "numerics")
    y = np.zeros(lp.n_rows)
    nle = int(le.sum())
    if A_ub.shape[0]:
        y[le] = res.ineqlin.marginals[:nle]
        y[ge] = -res.ineqlin.marginals[nle:]
    if eq.any():
        y[eq] = res.eqlin.marginals
    d = res.lower.marginals + res.upper.marginals
    x = np.asarray(res.x, float)
    return LpSolution("optimal", x=x, objective=float(c @ x) + lp.obj_offset, duals=y,
                      reduced_costs=d, iterations=int(getattr(res, "nit", 0)))


def solve_mip_highs(lp: LinearProgram, gap: float = 0.0, time_limit: float | None = None,
                    node_limit: int | None = None) -> MipSolution:
    A, sense, b, c, lo, hi, is_bin = lp.arrays()
    rlo = np.where(sense == LE, -np.inf, b).astype(float)
    rhi = np.where(sense == GE, np.inf, b).astype(float)
    options = {"mip_rel_gap": max(gap, 1e-9)}
    if time_limit is not None:
        options["time_limit"] = time_limit
    if node_limit is not None:
        options["node_limit"] = node_limit
    cons = [LinearConstraint(A, rlo, rhi)] if lp.n_rows else []
    res = milp(c, integrality=is_bin.astype(int), bounds=Bounds(lo, hi), constraints=cons,
               options=options)
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 2:
        return MipSolution("infeasible", nodes=nodes)
    if res.status == 3:
        return MipSolution("unbounded", nodes=nodes)
    if res.x is None:
        return MipSolution("time_limit" if res.status == 1 else "numerics", nodes=nodes)
    x = np.asarray(res.x, float)
    x[is_bin] = np.round(x[is_bin])
    obj = lp.objective_value(x)
    bound = getattr(res, "mip_dual_bound", None)
    bound = obj if bound is None or not np.isfinite(bound) else float(bound) + lp.obj_offset
    status = "optimal" if res.status == 0 else "time_limit"
    return MipSolution(status, x=x, objective=obj, bound=min(bound, obj), nodes=nodes)

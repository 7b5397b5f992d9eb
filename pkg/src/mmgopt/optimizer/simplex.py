"""Bounded-variable revised simplex (two phases) with dual extraction.

Every row gets a logical (slack) column with bounds that encode the row
sense, so the working form is ``A x + s = b, lo <= (x, s) <= hi``.  Rows
whose starting residual violates the slack bounds receive an artificial
column that phase one drives to zero.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .model import GE, LE, TOL, LinearProgram, LpSolution, Tolerances


class _Work:
    def __init__(self, A: sp.csc_matrix, b, lo, hi, art_rows, art_sign):
        self.A = A
        self.m, self.n = A.shape
        self.b = b
        self.art_rows = art_rows
        self.art_sign = art_sign
        self.lo = lo
        self.hi = hi
        self.ntot = self.n + self.m + len(art_rows)

    def column(self, j: int) -> np.ndarray:
        n, m = self.n, self.m
        if j < n:
            col = np.zeros(m)
            s, e = self.A.indptr[j], self.A.indptr[j + 1]
            col[self.A.indices[s:e]] = self.A.data[s:e]
            return col
        col = np.zeros(m)
        if j < n + m:
            col[j - n] = 1.0
        else:
            k = j - n - m
            col[self.art_rows[k]] = self.art_sign[k]
        return col

    def times_transpose(self, y: np.ndarray) -> np.ndarray:
        """A_full' y for every column."""
        out = np.empty(self.ntot)
        out[: self.n] = self.A.T @ y
        out[self.n: self.n + self.m] = y
        if len(self.art_rows):
            out[self.n + self.m:] = self.art_sign * y[self.art_rows]
        return out

    def times(self, x: np.ndarray) -> np.ndarray:
        """A_full x."""
        r = self.A @ x[: self.n] + x[self.n: self.n + self.m]
        if len(self.art_rows):
            np.add.at(r, self.art_rows, self.art_sign * x[self.n + self.m:])
        return r

    def basis_matrix(self, basis) -> np.ndarray:
        B = np.empty((self.m, self.m))
        for k, j in enumerate(basis):
            B[:, k] = self.column(j)
        return B


def _refactor(w: _Work, basis, x):
    B = w.basis_matrix(basis)
    try:
        Binv = np.linalg.inv(B)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(Binv)):
        return None
    xN = x.copy()
    xN[basis] = 0.0
    x[basis] = Binv @ (w.b - w.times(xN))
    return Binv


def _run(w: _Work, cost, basis, x, Binv, tol: Tolerances, max_iter: int):
    """Primal simplex iterations on the current basis. Returns status, Binv, y, d, iters."""
    m = w.m
    is_basic = np.zeros(w.ntot, bool)
    is_basic[basis] = True
    streak = 0
    bland = False
    since_refactor = 0
    it = 0
    while True:
        y = Binv.T @ cost[basis]
        d = cost - w.times_transpose(y)
        d[is_basic] = 0.0
        can_up = x < w.hi - tol.feasibility
        can_dn = x > w.lo + tol.feasibility
        elig = ~is_basic & (((d < -tol.optimality) & can_up) | ((d > tol.optimality) & can_dn))
        if not elig.any():
            return "optimal", Binv, y, d, it
        if it >= max_iter:
            return "iteration_limit", Binv, y, d, it
        it += 1
        cand = np.flatnonzero(elig)
        q = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
        dirn = 1.0 if d[q] < 0 else -1.0
        wq = Binv @ w.column(q)
        delta = dirn * wq
        xB = x[basis]
        loB, hiB = w.lo[basis], w.hi[basis]
        ratio = np.full(m, np.inf)
        dec = (delta > tol.pivot) & np.isfinite(loB)
        inc = (delta < -tol.pivot) & np.isfinite(hiB)
        ratio[dec] = np.maximum(xB[dec] - loB[dec], 0.0) / delta[dec]
        ratio[inc] = np.maximum(hiB[inc] - xB[inc], 0.0) / -delta[inc]
        t_row = ratio.min() if m else np.inf
        t_flip = w.hi[q] - w.lo[q]
        if not np.isfinite(t_row) and not np.isfinite(t_flip):
            return "unbounded", Binv, y, d, it
        if t_flip <= t_row:
            x[q] += dirn * t_flip
            x[basis] -= t_flip * delta
            streak = 0
            bland = False
            continue
        ties = np.flatnonzero(ratio <= t_row + 1e-12 * max(1.0, t_row))
        if bland:
            r = int(ties[np.argmin(np.asarray(basis)[ties])])
        else:
            r = int(ties[np.argmax(np.abs(delta[ties]))])
        t = ratio[r]
        if abs(wq[r]) < tol.pivot:
            Binv = _refactor(w, basis, x)
            if Binv is None:
                return "numerics", None, y, d, it
            continue
        leave = basis[r]
        x[q] += dirn * t
        x[basis] -= t * delta
        x[leave] = w.lo[leave] if delta[r] > 0 else w.hi[leave]
        basis[r] = q
        is_basic[leave] = False
        is_basic[q] = True
        piv = Binv[r] / wq[r]
        Binv -= np.outer(wq, piv)
        Binv[r] = piv
        since_refactor += 1
        if t <= 1e-12:
            streak += 1
            if streak >= tol.degenerate_streak:
                bland = True
        else:
            streak = 0
            bland = False
        if since_refactor >= tol.refactor_every:
            Binv = _refactor(w, basis, x)
            since_refactor = 0
            if Binv is None:
                return "numerics", None, y, d, it


def solve_lp_simplex(lp: LinearProgram, tol: Tolerances = TOL, max_iter: int | None = None,
                     lo=None, hi=None) -> LpSolution:
    """Solve ``lp`` (integrality ignored). `lo`/`hi` override column bounds."""
    A, sense, b, c, lo0, hi0, _ = lp.arrays()
    lo = lo0 if lo is None else np.asarray(lo, float)
    hi = hi0 if hi is None else np.asarray(hi, float)
    m, n = A.shape
    if np.any(lo > hi + tol.feasibility):
        return LpSolution("infeasible")
    A = A.tocsc()
    slo = np.where(sense == GE, -np.inf, 0.0).astype(float)
    shi = np.where(sense == LE, np.inf, 0.0).astype(float)

    xs = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
    r = b - A @ xs if m else np.zeros(0)
    sval = np.clip(r, slo, shi)
    gap = r - sval
    need = np.abs(gap) > tol.feasibility
    art_rows = np.flatnonzero(need)
    art_sign = np.sign(gap[art_rows])
    k = len(art_rows)
    full_lo = np.concatenate([lo, slo, np.zeros(k)])
    full_hi = np.concatenate([hi, shi, np.full(k, np.inf)])
    w = _Work(A, b, full_lo, full_hi, art_rows, art_sign)
    x = np.concatenate([xs, np.where(need, sval, r), np.abs(gap[art_rows])])
    basis = np.arange(n, n + m)
    diag = np.ones(m)
    for kk, i in enumerate(art_rows):
        basis[i] = n + m + kk
        diag[i] = art_sign[kk]
    Binv = np.diag(1.0 / diag) if m else np.zeros((0, 0))
    max_iter = max_iter or 50 * (m + n) + 1000
    iters = 0

    if k:
        cost1 = np.zeros(w.ntot)
        cost1[n + m:] = 1.0
        status, Binv, _, _, it = _run(w, cost1, basis, x, Binv, tol, max_iter)
        iters += it
        if status != "optimal":
            return LpSolution("numerics" if status != "iteration_limit" else status, iterations=iters)
        infeas = x[n + m:].sum()
        if infeas > tol.feasibility * max(1.0, np.abs(b).max(initial=0.0)):
            return LpSolution("infeasible", iterations=iters)
        w.hi[n + m:] = 0.0
        x[n + m:] = np.minimum(x[n + m:], 0.0)

    cost = np.concatenate([c, np.zeros(m + k)])
    status, Binv, y, d, it = _run(w, cost, basis, x, Binv, tol, max_iter)
    iters += it
    if status != "optimal":
        return LpSolution(status, iterations=iters)
    # final refactor to clean drift, then re-verify
    Binv = _refactor(w, basis, x)
    if Binv is None:
        return LpSolution("numerics", iterations=iters)
    y = Binv.T @ cost[basis]
    d = cost - w.times_transpose(y)
    d[basis] = 0.0
    xs = x[:n].copy()
    scale = 1.0 + np.abs(b).max(initial=0.0)
    if _violation(lp, xs, lo, hi) > 1e-6 * scale:
        return LpSolution("numerics", iterations=iters)
    return LpSolution("optimal", x=xs, objective=float(c @ xs) + lp.obj_offset, duals=y,
                      reduced_costs=d[:n].copy(), iterations=iters)


def _violation(lp, xs, lo, hi) -> float:
    act = lp.row_activity(xs)
    rhs = np.asarray(lp.rhs)
    sense = np.asarray(lp.sense, dtype=object)
    v = np.where(sense == LE, act - rhs, np.where(sense == GE, rhs - act, np.abs(act - rhs)))
    bv = np.maximum(lo - xs, xs - hi)
    return float(max(v.max(initial=0.0), bv.max(initial=0.0)))

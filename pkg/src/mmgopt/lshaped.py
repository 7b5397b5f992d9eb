"""L-shaped decomposition with optimality cuts and integer cost recovery.

The outer loop solves the master over maintenance binaries, evaluates the
LP-relaxed weekly operations at the master's schedule and adds dual
optimality cuts until the relaxed bounds meet.  The inner loop then prices
the schedule with exact (integer) operations and, when the relaxation
under-states the cost, adds an integer cut on a non-negative recovery
variable that lifts the master objective at exactly that schedule.

Two cut families are supported: one estimator per week (``variant="week"``)
or one per week and scenario (``variant="week-scenario"``).
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .formulation import (MaintenanceSchedule, ModelHandle, build_master, build_subproblem,
                          first_stage_columns, maintenance_columns)
from .optimizer import GE, LE, dual_objective, solve_lp, solve_mip
from .system import MMGSystem, ScenarioSet

VARIANTS = ("week", "week-scenario")
# "global": one recovery variable over all maintenance binaries.
# "scope": one per cut scope, over the binaries that scope's operations depend on.
RECOVERY_MODES = ("scope", "global")


@dataclass
class LShapedConfig:
    variant: str = "week"
    eps_l: float = 1e-3
    eps_c: float = 1e-3
    max_iterations: int = 200
    max_rounds: int = 50
    lp_backend: str = "highs"
    mip_backend: str = "highs"
    master_backend: str = "highs"
    mip_gap: float = 1e-7
    cut_tolerance: float = 1e-7
    workers: int = 1
    time_limit: float | None = None
    recovery: str = "scope"

    def __post_init__(self):
        if self.recovery not in RECOVERY_MODES:
            raise ValueError(f"recovery must be one of {RECOVERY_MODES}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not (self.eps_l > 0 and self.eps_c > 0):
            raise ValueError("tolerances must be > 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class OptimalityCut:
    """``rec(scope) >= alpha - beta . z`` over the scope's coupling columns."""

    scope: tuple
    alpha: float
    beta: dict  # first-stage column name -> coefficient
    iteration: int = 0

    def value(self, z: dict) -> float:
        return self.alpha - sum(c * z.get(n, 0.0) for n, c in self.beta.items())


@dataclass
class CostRecoveryCut:
    """``recov >= delta * (Phi(z, S) - |S| + 1)`` over ``columns``.

    ``scope`` is None for the global recovery variable.
    """

    support: frozenset
    delta: float
    columns: tuple  # binaries the cut ranges over
    scope: tuple | None = None

    def value(self, z: dict) -> float:
        phi = sum(z.get(n, 0.0) if n in self.support else -z.get(n, 0.0) for n in self.columns)
        return self.delta * (phi - len(self.support) + 1)


@dataclass
class ConvergenceState:
    lb: float = -math.inf
    ub: float = math.inf
    iteration: int = 0
    round: int = 0
    conv_outer: bool = False
    conv_inner: bool = False
    eps_l: float = 1e-3
    eps_c: float = 1e-3
    trace: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        if not (math.isfinite(self.lb) and math.isfinite(self.ub)):
            return math.inf
        return (self.ub - self.lb) / max(abs(self.lb), 1e-12)


@dataclass
class LShapedResult:
    schedule: MaintenanceSchedule
    z: dict
    objective: float
    first_stage_cost: float
    recourse: dict  # scope -> exact weighted recourse at the final schedule
    relaxed_recourse: dict
    state: ConvergenceState
    cuts: list
    recovery_cuts: list
    cut_log: list
    status: str
    master: ModelHandle
    handles: dict = field(repr=False, default_factory=dict)

    def cut_log_jsonl(self) -> str:
        return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in self.cut_log)


# ---------------------------------------------------------------- subproblem evaluation

@dataclass
class Recourse:
    """One scope's operations model plus cached evaluations."""

    scope: tuple
    handle: ModelHandle
    weight: float
    relaxed_cache: dict = field(default_factory=dict)
    exact_cache: dict = field(default_factory=dict)
    shared: dict | None = None

    def project(self, z: dict) -> tuple:
        return tuple(round(z.get(n, 0.0)) for n in self.handle.first_stage)

    def relaxed(self, z: dict, backend: str):
        """(weighted value, cut) of the LP relaxation at ``z``."""
        key = self.project(z)
        hit = self.relaxed_cache.get(key)
        if hit is not None:
            return hit
        zv = np.asarray(key, float)
        rhs = self.handle.rhs_at(zv)
        lp = self.handle.lp.with_rhs(rhs).relaxed()
        sol = solve_lp(lp, backend)
        if not sol.optimal:
            raise RuntimeError(f"relaxed operations for {self.scope} returned {sol.status}")
        value = sol.objective
        beta_vec = self.handle.coupling.T @ sol.duals if self.handle.first_stage else np.zeros(0)
        alpha = dual_objective(lp, sol, rhs=self.handle.base_rhs)
        tight = alpha - float(beta_vec @ zv)
        if not math.isfinite(alpha) or abs(tight - value) > 1e-6 * (1.0 + abs(value)):
            # duals reported too loosely to rebuild the intercept; anchor it at z instead
            alpha = value + float(beta_vec @ zv)
        w = self.weight
        cut = OptimalityCut(self.scope, w * alpha,
                            {n: w * float(c) for n, c in zip(self.handle.first_stage, beta_vec)
                             if c != 0.0})
        out = (w * value, cut)
        self.relaxed_cache[key] = out
        return out

    def exact(self, z: dict, backend: str, gap: float, audit=None):
        key = self.project(z)
        hit = self.exact_cache.get(key)
        if hit is not None:
            return hit
        skey = None
        if self.shared is not None:
            skey = (self.scope, frozenset(n for n, v in zip(self.handle.first_stage, key) if v))
            hit = self.shared.get(skey)
            if hit is not None:
                self.exact_cache[key] = hit
                return hit
        rhs = self.handle.rhs_at(np.asarray(key, float))
        lp = self.handle.lp.with_rhs(rhs)
        sol = solve_mip(lp, gap=gap, backend=backend)
        if not sol.has_incumbent:
            raise RuntimeError(f"exact operations for {self.scope} returned {sol.status}")
        if audit is not None:
            audit(self.handle, sol.x, rhs)
        out = self.weight * sol.objective
        self.exact_cache[key] = out
        if skey is not None:
            self.shared[skey] = out
        return out

    def lower_bound(self, backend: str) -> float:
        """Weighted relaxed recourse with every coupling row at its loosest."""
        Hc = self.handle.coupling
        rhs = self.handle.base_rhs.copy()
        if Hc is not None and Hc.shape[1]:
            sense = np.asarray(self.handle.lp.sense, dtype=object)
            neg = np.asarray(Hc.minimum(0).sum(axis=1)).ravel()
            pos = np.asarray(Hc.maximum(0).sum(axis=1)).ravel()
            rhs = np.where(sense == LE, rhs - neg, np.where(sense == GE, rhs - pos, rhs))
        sol = solve_lp(self.handle.lp.with_rhs(rhs).relaxed(), backend)
        if not sol.optimal:
            raise RuntimeError(f"bound solve for {self.scope} returned {sol.status}")
        return self.weight * sol.objective - 1e-9 * (1.0 + abs(sol.objective))


def build_recourse(system: MMGSystem, scenarios: ScenarioSet, variant: str,
                   master_columns: set | None = None, shared: dict | None = None) -> list[Recourse]:
    """One recourse scope per week (or per week and scenario).

    ``shared`` lets several runs on the same system and scenarios reuse exact
    weekly values; entries are keyed by the set of maintenance actions active
    in the scope, so runs with different PM windows can share it.
    """
    out = []
    for t in range(1, system.T + 1):
        if variant == "week":
            h = build_subproblem(system, scenarios, t, weighted=True, master_columns=master_columns)
            out.append(Recourse((t,), h, 1.0, shared=shared))
        else:
            for w in range(scenarios.n):
                h = build_subproblem(system, scenarios, t, [w], weighted=False,
                                     master_columns=master_columns)
                out.append(Recourse((t, w), h, float(scenarios.probabilities[w]), shared=shared))
    return out


def make_week_cut(recourse: Recourse, z: dict, backend: str = "highs") -> OptimalityCut:
    """Per-week optimality cut at ``z`` (scenario weights already inside the model)."""
    return recourse.relaxed(z, backend)[1]


def make_week_scenario_cut(recourse: Recourse, z: dict, backend: str = "highs") -> OptimalityCut:
    """Per-week-per-scenario cut at ``z``, scaled by the scenario probability."""
    return recourse.relaxed(z, backend)[1]


# ---------------------------------------------------------------- cost recovery

def cost_recovery(z: dict, relaxed_total: float, exact_total: float, theta: float, eps_c: float,
                  columns, scope: tuple | None = None) -> CostRecoveryCut | None:
    """Integer cut for schedule ``z`` when exact operations exceed what the master accounts for.

    The master already charges ``relaxed_total + theta`` at ``z``; a cut is
    emitted only if the exact total exceeds that by more than
    ``eps_c * |exact_total|``.  Its magnitude is the full relaxation gap.
    """
    if exact_total - relaxed_total - theta <= eps_c * abs(exact_total):
        return None
    support = frozenset(n for n in columns if z.get(n, 0.0) > 0.5)
    return CostRecoveryCut(support, max(exact_total - relaxed_total, 0.0), tuple(columns), scope)


# ---------------------------------------------------------------- driver

def _scope_name(kind: str, scope) -> str:
    return f"{kind}({','.join(str(s) for s in scope)})"


def _add_opt_cut(master: ModelHandle, cut: OptimalityCut, tag: str) -> None:
    lp = master.lp
    coefs = {lp.col(_scope_name("rec", cut.scope)): 1.0}
    for n, c in cut.beta.items():
        if lp.has_col(n):
            j = lp.col(n)
            coefs[j] = coefs.get(j, 0.0) + c
    lp.add_row(coefs, GE, cut.alpha, tag)


def _add_cra_cut(master: ModelHandle, cut: CostRecoveryCut, tag: str) -> None:
    lp = master.lp
    coefs = {lp.col(_scope_name("recov", cut.scope or ())): 1.0}
    for n in cut.columns:
        coefs[lp.col(n)] = -cut.delta if n in cut.support else cut.delta
    lp.add_row(coefs, GE, -cut.delta * (len(cut.support) - 1), tag)


def run_lshaped(system: MMGSystem, scenarios: ScenarioSet, cost_curves: dict,
                deadlines: dict | None = None, config: LShapedConfig | None = None,
                windows: dict | None = None, audit=None, exact_store: dict | None = None,
                **overrides) -> LShapedResult:
    """Solve the two-stage maintenance and operations problem by decomposition.

    ``overrides`` are applied on top of ``config`` (e.g. ``variant="week-scenario"``).
    ``audit(handle, x, rhs)`` is called on every exact operations solution.
    ``exact_store`` is an optional cross-run cache (see ``build_recourse``); the
    caller must only share it between runs on identical systems and scenarios.
    """
    cfg = config or LShapedConfig()
    if overrides:
        cfg = LShapedConfig(**{**cfg.__dict__, **overrides})
    t0 = time.perf_counter()
    probe = build_master(system, cost_curves, deadlines, windows)
    fs_cols = set(first_stage_columns(probe))
    maint = maintenance_columns(probe)
    scopes = build_recourse(system, scenarios, cfg.variant, fs_cols, exact_store)
    lower = {r.scope: r.lower_bound(cfg.lp_backend) for r in scopes}
    per_scope = cfg.recovery == "scope"
    master = build_master(system, cost_curves, deadlines, windows,
                          recourse_keys=[r.scope for r in scopes], recourse_lower=lower,
                          recovery=not per_scope)
    lp = master.lp
    if per_scope:
        for r in scopes:
            lp.add_col(_scope_name("recov", r.scope), lo=0.0, cost=1.0)
        theta_idx = {r.scope: lp.col(_scope_name("recov", r.scope)) for r in scopes}
    else:
        theta_idx = {None: lp.col("recov()")}
    fs_idx = [lp.col(n) for n in first_stage_columns(probe)]
    fs_names = [lp.col_names[j] for j in fs_idx]
    rec_idx = {r.scope: lp.col(_scope_name("rec", r.scope)) for r in scopes}
    cost = np.asarray(lp.cost)

    state = ConvergenceState(eps_l=cfg.eps_l, eps_c=cfg.eps_c)
    cuts: list[OptimalityCut] = []
    cra_cuts: list[CostRecoveryCut] = []
    log: list[dict] = []
    best = None  # (true objective, z, exact by scope, relaxed by scope)
    status = "converged"
    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None

    def evaluate(fn, items):
        return list(pool.map(fn, items)) if pool else [fn(i) for i in items]

    def first_cost(z):
        return float(sum(cost[j] * z[n] for j, n in zip(fs_idx, fs_names)))

    try:
        while not state.conv_inner:
            state.round += 1
            state.ub = math.inf
            state.conv_outer = False
            round_best = None  # (ub candidate, z, theta by key, relaxed by scope)
            while not state.conv_outer:
                if state.iteration >= cfg.max_iterations or (
                        cfg.time_limit is not None and time.perf_counter() - t0 > cfg.time_limit):
                    status = "iteration_limit"
                    break
                state.iteration += 1
                sol = solve_mip(lp, gap=cfg.mip_gap, backend=cfg.master_backend)
                if not sol.has_incumbent:
                    raise RuntimeError(f"master problem returned {sol.status}")
                x = sol.x
                z = {n: float(round(x[j])) for j, n in zip(fs_idx, fs_names)}
                theta = {k: max(float(x[j]), 0.0) for k, j in theta_idx.items()}
                state.lb = max(state.lb, sol.objective)
                results = evaluate(lambda r: r.relaxed(z, cfg.lp_backend), scopes)
                relaxed = {r.scope: v for r, (v, _) in zip(scopes, results)}
                cand = first_cost(z) + sum(relaxed.values()) + sum(theta.values())
                if cand < state.ub:
                    state.ub = cand
                    round_best = (cand, z, theta, relaxed)
                state.trace.append({"iteration": state.iteration, "round": state.round,
                                    "lb": state.lb, "ub": state.ub, "gap": state.gap})
                if state.ub - state.lb <= cfg.eps_l * abs(state.lb):
                    state.conv_outer = True
                    break
                added = 0
                for r, (val, cut) in zip(scopes, results):
                    eta = float(x[rec_idx[r.scope]])
                    violation = cut.value(z) - eta
                    is_new = violation > cfg.cut_tolerance * (1.0 + abs(val))
                    log.append({"iteration": state.iteration, "round": state.round,
                                "kind": "optimality", "scope": list(r.scope), "alpha": cut.alpha,
                                "beta_nnz": len(cut.beta), "violation": violation,
                                "added": bool(is_new)})
                    if is_new:
                        cut.iteration = state.iteration
                        cuts.append(cut)
                        _add_opt_cut(master, cut, f"opt{len(cuts)}")
                        added += 1
                if added == 0:
                    state.conv_outer = True
            if round_best is None:
                break
            _, z, theta, relaxed = round_best
            exact = dict(zip([r.scope for r in scopes],
                             evaluate(lambda r: r.exact(z, cfg.mip_backend, cfg.mip_gap, audit),
                                      scopes)))
            Q, R = sum(exact.values()), sum(relaxed.values())
            true_obj = first_cost(z) + Q
            if best is None or true_obj < best[0] - 1e-12 * (1 + abs(true_obj)):
                best = (true_obj, z, exact, relaxed)
            if status != "converged":
                break
            new = []
            if Q - R - sum(theta.values()) > cfg.eps_c * abs(Q):
                if per_scope:
                    for r in scopes:
                        gap_r = exact[r.scope] - relaxed[r.scope] - theta[r.scope]
                        if gap_r > cfg.cut_tolerance * (1.0 + abs(exact[r.scope])):
                            new.append(cost_recovery(z, relaxed[r.scope], exact[r.scope],
                                                     theta[r.scope], 0.0,
                                                     r.handle.first_stage, r.scope))
                else:
                    new.append(cost_recovery(z, R, Q, theta[None], cfg.eps_c, maint))
            for cut in new:
                log.append({"iteration": state.iteration, "round": state.round,
                            "kind": "recovery", "scope": list(cut.scope or ()),
                            "alpha": cut.delta, "beta_nnz": len(cut.support),
                            "violation": cut.delta - theta[cut.scope], "added": True})
                cra_cuts.append(cut)
                _add_cra_cut(master, cut, f"cra{len(cra_cuts)}")
            if not new:
                state.conv_inner = True
            elif state.round >= cfg.max_rounds:
                status = "iteration_limit"
                break
    finally:
        if pool:
            pool.shutdown()

    if best is None:
        raise RuntimeError("no schedule evaluated before the iteration cap")
    obj, z, exact, relaxed = best
    return LShapedResult(MaintenanceSchedule.from_values(z), z, obj, first_cost(z), exact, relaxed,
                         state, cuts, cra_cuts, log, status, master,
                         {r.scope: r for r in scopes})


__all__ = ["CostRecoveryCut", "ConvergenceState", "LShapedConfig", "LShapedResult",
           "OptimalityCut", "RECOVERY_MODES", "Recourse", "VARIANTS", "build_recourse",
           "cost_recovery", "make_week_cut", "make_week_scenario_cut", "run_lshaped"]

"""Independent reference computations shared by several test modules.

Nothing here calls the decomposition; schedules are enumerated directly
and each week's operations are priced as a standalone MIP.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from mmgopt.instances import conventional, renewable
from mmgopt.formulation import build_master, build_subproblem, first_stage_columns
from mmgopt.optimizer import EQ, GE, LE, LinearProgram, solve_lp, solve_mip
from mmgopt.prognostics import CostCurve, DegradationModel, PosteriorState
from mmgopt.system import GeneratorSpec, Microgrid, MMGSystem, generate_scenarios


# Brute-force optima of the bundled demos (enumeration over every feasible
# maintenance vector, each week priced as a standalone MIP); frozen here and
# re-derived by the L-shaped tests.
DEMO_OPTIMA = {
    "demo-two-mg": 1355.5025192293306,
    "demo-failed": 3890.499308243737,
    "demo-single": 2968.327802033052,
}


def feasible_first_stage(master) -> list[dict]:
    """Every binary vector satisfying the master rows (at most 2^16 candidates)."""
    lp = master.lp
    names = first_stage_columns(master)
    if len(names) > 16:
        raise ValueError("too many binaries to enumerate")
    cols = [lp.col(n) for n in names]
    A = lp.matrix()[:, cols].toarray()
    rhs = np.asarray(lp.rhs)
    sense = np.asarray(lp.sense, dtype=object)
    out = []
    for bits in itertools.product((0.0, 1.0), repeat=len(names)):
        act = A @ np.asarray(bits)
        ok = np.all(np.where(sense == LE, act <= rhs + 1e-9,
                             np.where(sense == GE, act >= rhs - 1e-9, np.abs(act - rhs) <= 1e-9)))
        if ok:
            out.append(dict(zip(names, bits)))
    return out


def all_first_stage(master) -> list[dict]:
    names = first_stage_columns(master)
    return [dict(zip(names, bits)) for bits in itertools.product((0.0, 1.0), repeat=len(names))]


def first_stage_cost(master, z: dict) -> float:
    lp = master.lp
    return float(sum(lp.cost[lp.col(n)] * v for n, v in z.items()))


class WeekPricer:
    """Exact or relaxed weekly recourse at a schedule, cached by projection."""

    def __init__(self, system, scenarios, master, relaxed=False):
        fs = set(first_stage_columns(master))
        self.handles = [build_subproblem(system, scenarios, t, master_columns=fs)
                        for t in range(1, system.T + 1)]
        self.relaxed = relaxed
        self.cache = {}

    def week(self, t: int, z: dict) -> float:
        h = self.handles[t - 1]
        key = (t, tuple(z.get(n, 0.0) for n in h.first_stage))
        if key not in self.cache:
            lp = h.instance(np.asarray(key[1], float))
            if self.relaxed:
                sol = solve_lp(lp.relaxed(), "highs")
            else:
                sol = solve_mip(lp, gap=1e-9, backend="highs")
            assert sol.status == "optimal", sol.status
            self.cache[key] = sol.objective
        return self.cache[key]

    def total(self, z: dict) -> float:
        return sum(self.week(t, z) for t in range(1, len(self.handles) + 1))


class ScopePricer:
    """Weighted operations cost of one cut scope, ``(t,)`` or ``(t, w)``, priced from scratch."""

    def __init__(self, system, scenarios, master):
        self.system, self.scenarios = system, scenarios
        self.names = set(first_stage_columns(master))
        self.handles = {}
        self.cache = {}

    def _handle(self, scope):
        if scope not in self.handles:
            t = scope[0]
            if len(scope) == 1:
                h = build_subproblem(self.system, self.scenarios, t, master_columns=self.names)
                self.handles[scope] = (h, 1.0)
            else:
                h = build_subproblem(self.system, self.scenarios, t, [scope[1]], weighted=False,
                                     master_columns=self.names)
                self.handles[scope] = (h, float(self.scenarios.probabilities[scope[1]]))
        return self.handles[scope]

    def value(self, scope, z: dict, relaxed: bool) -> float:
        h, weight = self._handle(scope)
        key = (scope, relaxed, tuple(z.get(n, 0.0) for n in h.first_stage))
        if key not in self.cache:
            lp = h.instance(np.asarray(key[2], float))
            sol = solve_lp(lp.relaxed(), "highs") if relaxed else solve_mip(lp, gap=1e-9,
                                                                             backend="highs")
            assert sol.status == "optimal", sol.status
            self.cache[key] = weight * sol.objective
        return self.cache[key]


def tiny_instance():
    """1 MG, T=3, H=2: small enough for the in-tree branch and bound on every weekly MIP."""
    mg = Microgrid("MG1", 1.0, 1.0, 40.0)
    ders = [renewable("WT1", "MG1", "wind", p_max=1.0),
            conventional("CG1", "MG1", p_max=1.5, p_min=0.5, min_up=1, min_down=1)]
    system = MMGSystem([mg], ders, T=3, H=2, name="tiny")
    spec = GeneratorSpec.from_system(system, 1, crit_load={"MG1": 0.6}, noncrit_load={"MG1": 0.8},
                                     penalty_crit=500.0, penalty_noncrit=120.0)
    curves = {"WT1": CostCurve(np.array([30.0, 20.0, 25.0]), 300, 1200),
              "CG1": CostCurve(np.array([40.0, 35.0, 50.0]), 400, 1600)}
    return system, generate_scenarios(spec, 3), curves, {"WT1": 3, "CG1": 3}


def enumerate_optimum(inst) -> tuple[float, dict]:
    """Brute-force optimum over every feasible maintenance vector."""
    master = build_master(inst.system, inst.cost_curves, inst.deadlines)
    pricer = WeekPricer(inst.system, inst.scenarios, master)
    best = (np.inf, None)
    for z in feasible_first_stage(master):
        v = first_stage_cost(master, z) + pricer.total(z)
        if v < best[0]:
            best = (v, z)
    return best


# ---------------------------------------------------------------- LP/MIP kernel oracles

def vertex_oracle(A, b, lo, hi, c):
    """Minimum of c.x over {A x <= b, lo <= x <= hi} by enumerating vertices."""
    n = A.shape[1]
    G = np.vstack([A, -np.eye(n), np.eye(n)])
    h = np.concatenate([b, -lo, hi])
    best = np.inf
    for rows in itertools.combinations(range(G.shape[0]), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ x <= h + 1e-7):
            best = min(best, float(c @ x))
    return best


def random_lp(rng, n=3, m=4, feasible=False):
    """Small bounded LP; ``feasible`` places a random box point inside every row."""
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    b = rng.integers(-3, 10, size=m).astype(float)
    c = rng.integers(-5, 6, size=n).astype(float)
    hi = rng.integers(1, 6, size=n).astype(float)
    lo = np.zeros(n)
    senses = rng.choice([LE, GE], size=m)
    if feasible:
        x0 = rng.uniform(lo, hi)
        slack = rng.integers(0, 4, size=m)
        b = np.where(senses == LE, np.ceil(A @ x0) + slack, np.floor(A @ x0) - slack)
    lp = LinearProgram("rand")
    for j in range(n):
        lp.add_col(f"x{j}", lo[j], hi[j], c[j])
    Ale, ble = [], []
    for i in range(m):
        lp.add_row({j: A[i, j] for j in range(n) if A[i, j]}, senses[i], b[i])
        sgn = 1.0 if senses[i] == LE else -1.0
        Ale.append(sgn * A[i])
        ble.append(sgn * b[i])
    return lp, np.array(Ale), np.array(ble), lo, hi, c


def brute_force_mip(lp):
    A, sense, b, c, lo, hi, is_bin = lp.arrays()
    best = np.inf
    for bits in itertools.product([0.0, 1.0], repeat=lp.n_cols):
        x = np.array(bits)
        if lp.max_violation(x) <= 1e-9:
            best = min(best, float(c @ x))
    return best


def knapsack(rng, n):
    lp = LinearProgram("knap")
    w = rng.integers(1, 10, n)
    v = rng.integers(1, 10, n)
    ids = [lp.add_col(f"b{i}", cost=-float(v[i]), binary=True) for i in range(n)]
    lp.add_row({i: float(w[i]) for i in ids}, LE, float(w.sum() // 2))
    return lp


def assignment(rng, k):
    lp = LinearProgram("assign")
    cost = rng.integers(1, 20, (k, k))
    ids = {(i, j): lp.add_col(f"a({i},{j})", cost=float(cost[i, j]), binary=True)
           for i in range(k) for j in range(k)}
    for i in range(k):
        lp.add_row({ids[i, j]: 1.0 for j in range(k)}, EQ, 1.0)
        lp.add_row({ids[j, i]: 1.0 for j in range(k)}, EQ, 1.0)
    return lp


# ---------------------------------------------------------------- prognostics oracles

def lin(mean=1.0, var=0.04, noise=0.01, theta=10.0, kappa=0.0):
    return DegradationModel(kappa, mean, var, noise, theta)


MC_MODELS = [
    (lin(1.0, 0.04, 0.0, 10.0), PosteriorState(1.0, 0.01), 30, 1),
    (DegradationModel(1.0, 0.05, 0.01, 0.0, 20.0, form="exponential"),
     PosteriorState(0.05, 0.0001), 120, 2),
    (lin(0.5, 0.04, 0.0, 30.0, kappa=2.0), PosteriorState(0.6, 0.004, 5, 10.0, 8.1), 80, 3),
]


def first_passage_mc(model, post, T_max, seed, n=100_000):
    rng = np.random.default_rng(seed)
    phi = rng.normal(post.mean, math.sqrt(post.var), n)
    t = post.t_last + np.arange(1, T_max + 1)
    if model.form == "linear":
        traj = model.kappa + phi[:, None] * t[None, :]
    else:
        traj = model.kappa * np.exp(phi[:, None] * t[None, :])
    hit = traj >= model.threshold
    first = np.where(hit.any(axis=1), np.argmax(hit, axis=1), T_max)
    freq = np.bincount(first, minlength=T_max + 1) / n
    return freq[:T_max], freq[T_max]


def direct_cost(pmf, tail, C_p, C_f, t_o, t):
    """Straight evaluation of the cost-rate ratio with plain loops."""
    def S(k):
        if k == 0:
            return 1.0
        return tail + sum(pmf[j] for j in range(k, len(pmf)))
    integral = sum(S(z - 1) for z in range(1, t + 1))
    return (C_p * S(t) + C_f * (1.0 - S(t))) / (integral + t_o)

"""Model builders for integrated maintenance and operations scheduling.

The first stage holds weekly maintenance binaries: PM starts ``nu(der,t)`` for
operational DERs, CM starts ``z(der,t)`` for failed DERs and crew visits
``crew(mg,t)``.  The second stage is an hourly unit-commitment and dispatch
problem per week and scenario.  Second-stage models are built once with the
first-stage terms moved to the right-hand side, so each row reads

    A y  (sense)  e - H z

where ``e`` is ``ModelHandle.base_rhs`` and ``H`` is ``ModelHandle.coupling``
(columns ordered as ``ModelHandle.first_stage``).
"""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .optimizer import EQ, GE, LE, LinearProgram
from .system import (ISLANDED, LOCALLY_CONNECTED, NON_RENEWABLE, OPERATIONAL, MMGSystem,
                     ScenarioSet)

DEFAULT_COLUMN_BUDGET = 60_000


class ScheduleInfeasible(ValueError):
    """Maintenance windows that no crew routing can satisfy."""


class ModelTooLarge(ValueError):
    pass


def _name(kind: str, *subs) -> str:
    return f"{kind}({','.join(str(s) for s in subs)})"


class _Builder:
    def __init__(self, name: str):
        self.lp = LinearProgram(name)
        self.index: dict[tuple, int] = {}

    def col(self, kind, subs, lo=0.0, hi=math.inf, cost=0.0, binary=False) -> int:
        j = self.lp.add_col(_name(kind, *subs), lo, hi, cost, binary)
        self.index[(kind, *subs)] = j
        return j

    def row(self, kind, subs, coefs, sense, rhs) -> int:
        return self.lp.add_row(coefs, sense, rhs, _name(kind, *subs))


@dataclass
class ModelHandle:
    lp: LinearProgram
    index: dict
    first_stage: list[str] = field(default_factory=list)
    coupling: sp.csr_matrix | None = None
    base_rhs: np.ndarray | None = None
    week: int | None = None
    scenarios: list[int] = field(default_factory=list)
    weights: np.ndarray | None = None
    gate_rows: dict = field(default_factory=dict)  # (der, h, w) -> (row, column)

    def col(self, kind, *subs) -> int:
        return self.index[(kind, *subs)]

    def rhs_at(self, z) -> np.ndarray:
        """Right-hand side for first-stage values ``z`` (aligned with ``first_stage``)."""
        if self.coupling is None or not self.first_stage:
            return self.base_rhs.copy()
        return self.base_rhs - self.coupling @ np.asarray(z, float)

    def instance(self, z) -> LinearProgram:
        return self.lp.with_rhs(self.rhs_at(z))


# ---------------------------------------------------------------- schedules

_KEY = re.compile(r"^(nu|z|crew)\(([^,()]+),(\d+)\)$")


@dataclass
class MaintenanceSchedule:
    pm: dict[str, int] = field(default_factory=dict)
    cm: dict[str, int] = field(default_factory=dict)
    crew: set = field(default_factory=set)  # {(mg, week)}

    @classmethod
    def from_values(cls, values: dict[str, float]) -> "MaintenanceSchedule":
        out = cls()
        for name, v in values.items():
            m = _KEY.match(name)
            if m is None or v < 0.5:
                continue
            kind, key, t = m.group(1), m.group(2), int(m.group(3))
            if kind == "nu":
                out.pm[key] = t
            elif kind == "z":
                out.cm[key] = t
            else:
                out.crew.add((key, t))
        return out

    def value(self, name: str) -> float:
        m = _KEY.match(name)
        if m is None:
            raise KeyError(name)
        kind, key, t = m.group(1), m.group(2), int(m.group(3))
        if kind == "nu":
            return float(self.pm.get(key) == t)
        if kind == "z":
            return float(self.cm.get(key) == t)
        return float((key, t) in self.crew)

    def vector(self, names) -> np.ndarray:
        return np.array([self.value(n) for n in names], float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "id", "action", "week"])
        for d, t in sorted(self.pm.items()):
            w.writerow(["der", d, "PM", t])
        for d, t in sorted(self.cm.items()):
            w.writerow(["der", d, "CM", t])
        for m, t in sorted(self.crew):
            w.writerow(["crew", m, "visit", t])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MaintenanceSchedule":
        out = cls()
        for row in csv.DictReader(io.StringIO(text)):
            t = int(row["week"])
            if row["action"] == "PM":
                out.pm[row["id"]] = t
            elif row["action"] == "CM":
                out.cm[row["id"]] = t
            else:
                out.crew.add((row["id"], t))
        return out

    def write(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def read(cls, path) -> "MaintenanceSchedule":
        return cls.from_csv(Path(path).read_text())


# ---------------------------------------------------------------- master

def pm_windows(system: MMGSystem, deadlines: dict[str, int]) -> dict[str, list[int]]:
    """Allowed PM start weeks 1..deadline (clipped to the horizon)."""
    return {d.id: list(range(1, min(deadlines[d.id], system.T) + 1)) for d in system.operational}


def check_windows(system: MMGSystem, windows: dict[str, list[int]]) -> None:
    """Reject windows that a single crew cannot serve.

    Every microgrid with a DER whose window closes by week ``d`` needs its own
    crew week within ``1..d``; more such microgrids than weeks is infeasible.
    """
    for d in system.operational:
        if d.id not in windows:
            raise ScheduleInfeasible(f"no PM window given for operational DER {d.id}")
    closes: dict[str, int] = {}
    for d in system.operational:
        w = windows[d.id]
        if w:
            closes[d.microgrid] = min(closes.get(d.microgrid, system.T), max(w))
    for d in system.failed:
        closes.setdefault(d.microgrid, system.T)
    for week in range(1, system.T + 1):
        need = sum(1 for c in closes.values() if c <= week)
        if need > week:
            raise ScheduleInfeasible(
                f"{need} microgrids must be visited by week {week}; one crew can cover {week}")


def crew_feasible_windows(system: MMGSystem, windows: dict[str, list[int]]) -> dict[str, list[int]]:
    """Stretch the tightest windows just enough for one crew to reach every microgrid.

    Microgrids are ranked by the week their earliest window closes; the k-th
    may close no earlier than week k.  Windows that close too early are
    extended with the following weeks, everything else is returned unchanged.
    """
    closes = {}
    for d in system.operational:
        w = windows.get(d.id, [])
        if w:
            closes[d.microgrid] = min(closes.get(d.microgrid, system.T), max(w))
    for d in system.failed:
        closes.setdefault(d.microgrid, system.T)
    lifted = {}
    for k, (m, c) in enumerate(sorted(closes.items(), key=lambda mc: (mc[1], mc[0])), start=1):
        lifted[m] = max(c, min(k, system.T))
    out = {}
    for d_id, w in windows.items():
        d = system.der(d_id)
        w = list(w)
        if w and max(w) < lifted.get(d.microgrid, 0):
            w += list(range(max(w) + 1, lifted[d.microgrid] + 1))
        out[d_id] = w
    return out


def _curve_value(curve, t: int) -> float:
    vals = getattr(curve, "values", curve)
    vals = np.asarray(vals, float)
    if vals.size == 0:
        return 0.0
    return float(vals[min(t, vals.size) - 1])


def build_master(system: MMGSystem, cost_curves: dict, deadlines: dict[str, int] | None = None,
                 windows: dict[str, list[int]] | None = None, recourse_keys=(),
                 recourse_lower: dict | None = None, recovery: bool = False) -> ModelHandle:
    """First-stage model.

    ``windows`` (allowed PM weeks per operational DER) overrides ``deadlines``;
    an empty window means no PM for that DER in this horizon.  ``recourse_keys``
    adds one free estimator column ``rec(...)`` per key, and ``recovery`` adds
    the non-negative cost-recovery column ``recov``.
    """
    if windows is None:
        if deadlines is None:
            raise ValueError("need deadlines or windows")
        windows = pm_windows(system, deadlines)
    check_windows(system, windows)
    T = system.T
    b = _Builder("master")
    for d in system.operational:
        for t in windows[d.id]:
            b.col("nu", (d.id, t), cost=_curve_value(cost_curves.get(d.id, ()), t), binary=True)
    for d in system.failed:
        for t in range(1, T + 1):
            b.col("z", (d.id, t), cost=d.cm_cost, binary=True)
    for m in system.microgrids:
        for t in range(1, T + 1):
            b.col("crew", (m.id, t), cost=m.crew_cost, binary=True)
    for key in recourse_keys:
        key = key if isinstance(key, tuple) else (key,)
        lo = -math.inf if recourse_lower is None else recourse_lower.get(key, -math.inf)
        b.col("rec", key, lo=lo, hi=math.inf, cost=1.0)
    if recovery:
        b.col("recov", (), lo=0.0, cost=1.0)

    for d in system.operational:
        if windows[d.id]:
            b.row("pm", (d.id,), {b.index[("nu", d.id, t)]: 1.0 for t in windows[d.id]}, EQ, 1.0)
    for d in system.failed:
        b.row("cm", (d.id,), {b.index[("z", d.id, t)]: 1.0 for t in range(1, T + 1)}, EQ, 1.0)
    for d in system.ders:
        kind, dur = ("nu", d.pm_duration) if d.status == OPERATIONAL else ("z", d.cm_duration)
        for t in range(1, T + 1):
            cols = [b.index[(kind, d.id, t - k)] for k in range(dur) if (kind, d.id, t - k) in b.index]
            if cols:
                coefs = {j: 1.0 for j in cols}
                coefs[b.index[("crew", d.microgrid, t)]] = -1.0
                b.row("crewpm" if kind == "nu" else "crewcm", (d.id, t), coefs, LE, 0.0)
    if len(system.microgrids) >= 2:
        for t in range(1, T + 1):
            b.row("crewone", (t,), {b.index[("crew", m.id, t)]: 1.0 for m in system.microgrids},
                  LE, 1.0)
    return ModelHandle(b.lp, b.index)


def maintenance_columns(handle: ModelHandle) -> list[str]:
    """Names of the first-stage PM/CM binaries (crew excluded)."""
    return [handle.lp.col_names[j] for k, j in handle.index.items() if k[0] in ("nu", "z")]


def first_stage_columns(handle: ModelHandle) -> list[str]:
    return [handle.lp.col_names[j] for k, j in handle.index.items() if k[0] in ("nu", "z", "crew")]


# ---------------------------------------------------------------- second stage

def _gate_terms(system: MMGSystem, der, week: int):
    """First-stage terms (name, sign) that switch a DER off (PM) or on (CM) in ``week``."""
    if der.status == OPERATIONAL:
        return [(_name("nu", der.id, week - k), 1.0) for k in range(der.pm_duration) if week - k >= 1]
    return [(_name("z", der.id, k), 1.0) for k in range(1, week - der.cm_duration + 1)]


def build_subproblem(system: MMGSystem, scenarios: ScenarioSet, week: int, scenario_ids=None,
                     weighted: bool = True, relaxed: bool = False,
                     availability: dict[str, bool] | None = None,
                     initial_soc: dict[str, float] | None = None,
                     master_columns: set | None = None) -> ModelHandle:
    """Operations model for one week over the chosen scenarios.

    With ``weighted`` the objective carries scenario probabilities, otherwise
    each scenario counts once.  ``availability`` forces DERs off for the whole
    week independently of maintenance decisions.  ``master_columns`` limits
    coupling terms to first-stage columns that actually exist.
    """
    if scenarios.H != system.H:
        raise ValueError("scenario H does not match the system")
    ids = list(range(scenarios.n)) if scenario_ids is None else list(scenario_ids)
    weights = scenarios.probabilities[ids] if weighted else np.ones(len(ids))
    H = system.H
    t = week
    ti = t - 1
    mode = scenarios.mode(t)
    grid_off = mode in (LOCALLY_CONNECTED, ISLANDED)
    links_off = mode == ISLANDED
    rho = system.loss
    avail = availability or {}
    b = _Builder(f"week{t}")
    bin_ = not relaxed
    coupling: list[tuple[int, str, float]] = []
    gate_rows = {}

    def couple(row, terms, scale):
        for name, sgn in terms:
            if master_columns is None or name in master_columns:
                coupling.append((row, name, scale * sgn))

    for w, p in zip(ids, weights):
        for mi, mg in enumerate(system.microgrids):
            m = mg.id
            pb = scenarios.price_buy[w, mi, ti]
            ps = scenarios.price_sell[w, mi, ti]
            dc = scenarios.d_crit[w, mi, ti]
            dn = scenarios.d_noncrit[w, mi, ti]
            lc, ln = scenarios.penalty_crit[mi], scenarios.penalty_noncrit[mi]
            for h in range(1, H + 1):
                k = (m, t, h, w)
                gmax_b = 0.0 if grid_off else mg.grid_buy_max
                gmax_s = 0.0 if grid_off else mg.grid_sell_max
                b.col("ygp", k, hi=gmax_b, cost=p * pb[h - 1])
                b.col("ygs", k, hi=gmax_s, cost=-p * ps[h - 1])
                b.col("gp", k, hi=0.0 if grid_off else 1.0, binary=bin_)
                b.col("gs", k, hi=0.0 if grid_off else 1.0, binary=bin_)
                b.col("psic", k, hi=dc[h - 1], cost=p * lc)
                b.col("psin", k, hi=dn[h - 1], cost=p * ln)
                for l in system.neighbors(m):
                    lk = system.link(m, l)
                    kl = (m, l, t, h, w)
                    b.col("yp", kl, hi=0.0 if links_off else lk.buy_max)
                    b.col("ys", kl, hi=0.0 if links_off else lk.sell_max)
                    b.col("up", kl, hi=0.0 if links_off else 1.0, binary=bin_)
                    b.col("us", kl, hi=0.0 if links_off else 1.0, binary=bin_)
            for d in system.ders_in(m):
                off = avail.get(d.id, True) is False
                for h in range(1, H + 1):
                    k = (d.id, t, h, w)
                    if d.renewable:
                        b.col("y", k, hi=0.0 if off else math.inf)
                    else:
                        b.col("y", k, hi=0.0 if off else d.p_max, cost=p * d.marginal_cost)
                        b.col("x", k, hi=0.0 if off else 1.0, cost=p * d.no_load_cost, binary=bin_)
                        b.col("bon", k, hi=1.0, cost=p * d.start_cost)
                        b.col("boff", k, hi=1.0, cost=p * d.stop_cost)
            for bat in system.batteries_in(m):
                for h in range(1, H + 1):
                    k = (bat.id, t, h, w)
                    b.col("bch", k, hi=1.0, binary=bin_)
                    b.col("bdch", k, hi=1.0, binary=bin_)
                    b.col("pch", k)
                    b.col("pdch", k)
                    b.col("soc", k, lo=bat.soc_min, hi=bat.soc_max)

    I = b.index
    for w in ids:
        for mi, mg in enumerate(system.microgrids):
            m = mg.id
            dc = scenarios.d_crit[w, mi, ti]
            dn = scenarios.d_noncrit[w, mi, ti]
            for h in range(1, H + 1):
                k = (m, t, h, w)
                b.row("dir", k, {I[("gp", *k)]: 1.0, I[("gs", *k)]: 1.0}, LE, 1.0)
                b.row("gbuy", k, {I[("ygp", *k)]: 1.0, I[("gp", *k)]: -mg.grid_buy_max}, LE, 0.0)
                b.row("gsell", k, {I[("ygs", *k)]: 1.0, I[("gs", *k)]: -mg.grid_sell_max}, LE, 0.0)
                bal = {I[("ygp", *k)]: 1.0 - rho, I[("ygs", *k)]: -1.0,
                       I[("psic", *k)]: 1.0, I[("psin", *k)]: 1.0}
                for l in system.neighbors(m):
                    lk = system.link(m, l)
                    kl = (m, l, t, h, w)
                    b.row("ldir", kl, {I[("up", *kl)]: 1.0, I[("us", *kl)]: 1.0}, LE, 1.0)
                    b.row("lbuy", kl, {I[("yp", *kl)]: 1.0, I[("up", *kl)]: -lk.buy_max}, LE, 0.0)
                    b.row("lsell", kl, {I[("ys", *kl)]: 1.0, I[("us", *kl)]: -lk.sell_max}, LE, 0.0)
                    bal[I[("yp", *kl)]] = 1.0 - rho
                    bal[I[("ys", *kl)]] = -1.0
                    # what m buys from l is what l sells to m
                    b.row("link", kl, {I[("yp", *kl)]: 1.0, I[("ys", l, m, t, h, w)]: -1.0}, EQ, 0.0)
                for d in system.ders_in(m):
                    bal[I[("y", d.id, t, h, w)]] = 1.0
                for bat in system.batteries_in(m):
                    bal[I[("pdch", bat.id, t, h, w)]] = 1.0
                    bal[I[("pch", bat.id, t, h, w)]] = -1.0
                b.row("bal", k, bal, EQ, float(dc[h - 1] + dn[h - 1]))

            for d in system.ders_in(m):
                terms = _gate_terms(system, d, t)
                for h in range(1, H + 1):
                    k = (d.id, t, h, w)
                    yj = I[("y", *k)]
                    if d.renewable:
                        cap = float(scenarios.renewable[d.id][w, ti, h - 1])
                        if d.status == OPERATIONAL:
                            r = b.row("gate", k, {yj: 1.0}, LE, cap)
                            couple(r, terms, cap)
                        else:
                            r = b.row("gate", k, {yj: 1.0}, LE, 0.0)
                            couple(r, terms, -cap)
                        gate_rows[(d.id, h, w)] = (r, yj)
                    else:
                        xj = I[("x", *k)]
                        if d.status == OPERATIONAL:
                            r = b.row("gate", k, {xj: 1.0}, LE, 1.0)
                            couple(r, terms, 1.0)
                        else:
                            r = b.row("gate", k, {xj: 1.0}, LE, 0.0)
                            couple(r, terms, -1.0)
                        gate_rows[(d.id, h, w)] = (r, xj)
                if d.kind != NON_RENEWABLE:
                    continue
                x = [None] + [I[("x", d.id, t, h, w)] for h in range(1, H + 1)]
                y = [None] + [I[("y", d.id, t, h, w)] for h in range(1, H + 1)]
                for h in range(1, H + 1):
                    k = (d.id, t, h, w)
                    on = {x[h]: -1.0, I[("bon", *k)]: 1.0}
                    off = {x[h]: 1.0, I[("boff", *k)]: 1.0}
                    if h > 1:
                        on[x[h - 1]] = 1.0
                        off[x[h - 1]] = -1.0
                    b.row("on", k, on, GE, 0.0)
                    b.row("off", k, off, GE, 0.0)
                    b.row("capl", k, {y[h]: 1.0, x[h]: -d.p_min}, GE, 0.0)
                    b.row("capu", k, {y[h]: 1.0, x[h]: -d.p_max}, LE, 0.0)
                    ramp = {y[h]: 1.0}
                    if h > 1:
                        ramp[y[h - 1]] = -1.0
                    if math.isfinite(d.ramp_up):
                        b.row("rup", k, ramp, LE, d.ramp_up)
                    if math.isfinite(d.ramp_down):
                        b.row("rdn", k, ramp, GE, -d.ramp_down)
                    # switched on at h (x_0 = 0) -> stays on for the next MU - 1 hours
                    for hp in range(h + 1, min(h + d.min_up - 1, H) + 1):
                        c = {x[h]: 1.0, x[hp]: -1.0}
                        if h > 1:
                            c[x[h - 1]] = c.get(x[h - 1], 0.0) - 1.0
                        b.row("mu", (d.id, t, h, hp, w), c, LE, 0.0)
                    # switched off at h -> stays off for the next MD - 1 hours
                    if h >= 2:
                        for hp in range(h + 1, min(h + d.min_down - 1, H) + 1):
                            b.row("md", (d.id, t, h, hp, w),
                                  {x[h - 1]: 1.0, x[h]: -1.0, x[hp]: 1.0}, LE, 1.0)

            for bat in system.batteries_in(m):
                eta = bat.efficiency
                s0 = bat.initial_soc if initial_soc is None else initial_soc.get(bat.id, bat.initial_soc)
                for h in range(1, H + 1):
                    k = (bat.id, t, h, w)
                    rec = {I[("soc", *k)]: 1.0, I[("pch", *k)]: -eta, I[("pdch", *k)]: 1.0 / eta}
                    if h > 1:
                        rec[I[("soc", bat.id, t, h - 1, w)]] = -1.0
                    b.row("socr", k, rec, EQ, s0 if h == 1 else 0.0)
                    b.row("bx", k, {I[("bch", *k)]: 1.0, I[("bdch", *k)]: 1.0}, LE, 1.0)
                    b.row("chcap", k, {I[("pch", *k)]: 1.0, I[("bch", *k)]: -bat.charge_max}, LE, 0.0)
                    b.row("dchcap", k, {I[("pdch", *k)]: 1.0, I[("bdch", *k)]: -bat.discharge_max},
                          LE, 0.0)
                if H > 1:
                    b.row("tie", (bat.id, t, w), {I[("soc", bat.id, t, 1, w)]: 1.0,
                                                 I[("soc", bat.id, t, H, w)]: -1.0}, EQ, 0.0)

    names = sorted({n for _, n, _ in coupling})
    pos = {n: i for i, n in enumerate(names)}
    rows = [r for r, _, _ in coupling]
    cols = [pos[n] for _, n, _ in coupling]
    vals = [v for _, _, v in coupling]
    Hm = sp.csr_matrix((vals, (rows, cols)), shape=(b.lp.n_rows, len(names)))
    Hm.sum_duplicates()
    b.lp.matrix()
    return ModelHandle(b.lp, b.index, names, Hm, np.asarray(b.lp.rhs, float), week, ids,
                       np.asarray(weights, float), gate_rows)


# ---------------------------------------------------------------- deterministic equivalent

def _append(target: LinearProgram, src: LinearProgram, extra: dict[int, list[tuple[int, float]]],
            index_out: dict, index_src: dict) -> None:
    """Copy ``src`` into ``target``; ``extra[row]`` adds (target col, coef) terms to that row."""
    offset = target.n_cols
    for j in range(src.n_cols):
        target.add_col(src.col_names[j], src.lo[j], src.hi[j], src.cost[j], src.binary[j])
    A = src.matrix()
    for i in range(src.n_rows):
        s, e = A.indptr[i], A.indptr[i + 1]
        coefs = {int(c) + offset: float(v) for c, v in zip(A.indices[s:e], A.data[s:e])}
        for j, v in extra.get(i, ()):
            coefs[j] = coefs.get(j, 0.0) + v
        target.add_row(coefs, src.sense[i], src.rhs[i], src.row_names[i])
    for k, j in index_src.items():
        index_out[k] = j + offset


def build_deterministic_equivalent(system: MMGSystem, scenarios: ScenarioSet, cost_curves: dict,
                                   deadlines: dict[str, int] | None = None,
                                   windows: dict[str, list[int]] | None = None,
                                   column_budget: int = DEFAULT_COLUMN_BUDGET,
                                   availability: dict[str, bool] | None = None) -> ModelHandle:
    """Master plus every week's operations in one MILP, coupling rows live."""
    master = build_master(system, cost_curves, deadlines, windows)
    lp = master.lp.copy()
    lp.name = "deterministic_equivalent"
    index = dict(master.index)
    fs = set(first_stage_columns(master))
    gates = {}
    for t in range(1, system.T + 1):
        sub = build_subproblem(system, scenarios, t, weighted=True, availability=availability,
                               master_columns=fs)
        if lp.n_cols + sub.lp.n_cols > column_budget:
            raise ModelTooLarge(
                f"deterministic equivalent would exceed {column_budget} columns "
                f"(week {t} alone adds {sub.lp.n_cols}); use the decomposition instead")
        extra: dict[int, list] = {}
        Hc = sub.coupling.tocoo()
        for i, k, v in zip(Hc.row, Hc.col, Hc.data):
            extra.setdefault(int(i), []).append((lp.col(sub.first_stage[k]), float(v)))
        r0, c0 = lp.n_rows, lp.n_cols
        _append(lp, sub.lp, extra, index, sub.index)
        for (der, h, w), (r, j) in sub.gate_rows.items():
            gates[(der, t, h, w)] = (r0 + r, c0 + j)
    lp.matrix()
    return ModelHandle(lp, index, base_rhs=np.asarray(lp.rhs, float), gate_rows=gates)


# ---------------------------------------------------------------- audit

def audit_operations(handle: ModelHandle, x, system: MMGSystem, rhs=None, tol: float = 1e-6,
                     integer: bool = True) -> list[str]:
    """Trace-check an operations solution; returns human-readable problems (empty when sound)."""
    x = np.asarray(x, float)
    I = handle.index
    lp = handle.lp
    rhs = np.asarray(lp.rhs if rhs is None else rhs, float)
    act = lp.row_activity(x)
    issues = []
    for key, j in I.items():
        if key[0] != "ygp":
            continue
        m, t, h, w = key[1:]
        r = lp.row(_name("bal", m, t, h, w))
        if abs(act[r] - rhs[r]) > tol:
            issues.append(f"balance residual {act[r] - rhs[r]:.3g} at {m},{t},{h},{w}")
        if integer:
            if x[I[("gp", m, t, h, w)]] > tol and x[I[("gs", m, t, h, w)]] > tol:
                issues.append(f"grid buy and sell together at {m},{t},{h},{w}")
            for l in system.neighbors(m):
                if x[I[("up", m, l, t, h, w)]] > tol and x[I[("us", m, l, t, h, w)]] > tol:
                    issues.append(f"link buy and sell together at {m}->{l},{t},{h},{w}")
        if x[j] > tol and x[I[("ygs", m, t, h, w)]] > tol and integer:
            issues.append(f"grid power both ways at {m},{t},{h},{w}")
    H = system.H
    weeks_w = sorted({(k[2], k[4]) for k in I if k[0] == "soc"})
    for bat in system.batteries:
        for t, w in weeks_w:
            if ("soc", bat.id, t, 1, w) not in I:
                continue
            r0 = lp.row(_name("socr", bat.id, t, 1, w))
            soc = rhs[r0]
            for h in range(1, H + 1):
                k = (bat.id, t, h, w)
                pc, pd = x[I[("pch", *k)]], x[I[("pdch", *k)]]
                if integer and pc > tol and pd > tol:
                    issues.append(f"charge and discharge together at {bat.id},{t},{h},{w}")
                soc = soc + bat.efficiency * pc - pd / bat.efficiency
                if abs(soc - x[I[("soc", *k)]]) > tol:
                    issues.append(f"SOC recursion broken at {bat.id},{t},{h},{w}")
            if H > 1 and abs(x[I[("soc", bat.id, t, 1, w)]] - x[I[("soc", bat.id, t, H, w)]]) > tol:
                issues.append(f"weekly SOC tie broken for {bat.id},{t},{w}")
    for key, (r, j) in handle.gate_rows.items():
        # capacity left for the gated column once first-stage terms are accounted for
        cap = rhs[r] - (act[r] - x[j])
        if cap <= tol and x[j] > tol:
            issues.append(f"gated DER {key[0]} active at {key[1:]}")
    for d in system.ders:
        if d.renewable:
            continue
        for t, w in sorted({(k[2], k[4]) for k in I if k[0] == "x" and k[1] == d.id}):
            xs = [0.0] + [x[I[("x", d.id, t, h, w)]] for h in range(1, H + 1)]
            ys = [0.0] + [x[I[("y", d.id, t, h, w)]] for h in range(1, H + 1)]
            for h in range(1, H + 1):
                if ys[h] < d.p_min * xs[h] - tol or ys[h] > d.p_max * xs[h] + tol:
                    issues.append(f"capacity violated for {d.id} at {t},{h},{w}")
                if ys[h] - ys[h - 1] > d.ramp_up + tol or ys[h - 1] - ys[h] > d.ramp_down + tol:
                    issues.append(f"ramp violated for {d.id} at {t},{h},{w}")
            if not integer:
                continue
            on = [round(v) for v in xs]
            for h in range(1, H + 1):
                if on[h] == 1 and on[h - 1] == 0:
                    if any(on[k] == 0 for k in range(h, min(h + d.min_up - 1, H) + 1)):
                        issues.append(f"min-up violated for {d.id} at {t},{h},{w}")
                if h >= 2 and on[h] == 0 and on[h - 1] == 1:
                    if any(on[k] == 1 for k in range(h, min(h + d.min_down - 1, H) + 1)):
                        issues.append(f"min-down violated for {d.id} at {t},{h},{w}")
    return issues


__all__ = ["DEFAULT_COLUMN_BUDGET", "MaintenanceSchedule", "ModelHandle", "ModelTooLarge",
           "ScheduleInfeasible", "audit_operations", "build_deterministic_equivalent",
           "build_master", "build_subproblem", "check_windows", "crew_feasible_windows",
           "first_stage_columns",
           "maintenance_columns", "pm_windows"]

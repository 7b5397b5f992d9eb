"""Rolling-horizon evaluation, the age-based periodic benchmark and resilience metrics.

Each replication draws initial ages and true degradation trajectories from
one seed.  Both methods see the same trajectories and the same realized
operating trace (common random numbers), so their metrics differ only by
the maintenance decisions.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .formulation import (MaintenanceSchedule, build_master, build_subproblem,
                          crew_feasible_windows, pm_windows)
from .lshaped import LShapedConfig, run_lshaped
from .optimizer import solve_mip
from .prognostics import (CostCurve, DegradationModel, DegradationState, maintenance_deadline,
                          simulate_signal)
from .system import (GRID_CONNECTED, ISLANDED, LOCALLY_CONNECTED, OPERATIONAL, GeneratorSpec,
                     MMGSystem, ScenarioSet, generate_scenarios, set_connectivity)

SD_IOM, PERIODIC = "sd-iom", "periodic"
METHODS = (SD_IOM, PERIODIC)
UNEXPECTED_FAILURE = "unexpected-failure"
PLANNED_MAINTENANCE = "planned-maintenance"
UNINTERRUPTED = "uninterrupted"
OUTCOMES = (UNEXPECTED_FAILURE, PLANNED_MAINTENANCE, UNINTERRUPTED)
PERIODIC_WINDOW = (48, 52)
METRIC_COST, METRIC_CRITICAL, METRIC_NONCRITICAL = "cost", "critical-load", "non-critical-load"
RESILIENCE_METRICS = (METRIC_CRITICAL, METRIC_NONCRITICAL, METRIC_COST)
RESILIENCE_LABELS = {METRIC_CRITICAL: "Critical Loads", METRIC_NONCRITICAL: "Non-Critical Loads",
                     METRIC_COST: "Operational Costs"}
MODE_LABELS = {GRID_CONNECTED: "No Disruption", LOCALLY_CONNECTED: "MMG Locally-connected",
               ISLANDED: "MGs Islanded"}
METHOD_LABELS = {PERIODIC: "Periodic", SD_IOM: "SD-IOM"}


@dataclass
class RollingConfig:
    T: int = 52
    freeze: int = 8
    span: int = 78
    seeds: tuple = (0, 1, 2, 3)
    methods: tuple = METHODS
    n_scenarios: int = 2
    initial_age_range: tuple = (0, 50)
    signal_horizon: int = 2000
    lshaped: LShapedConfig = field(default_factory=LShapedConfig)

    def __post_init__(self):
        if not 1 <= self.freeze <= self.T:
            raise ValueError("need 1 <= freeze <= T")
        if self.span < self.freeze:
            raise ValueError("span must be >= freeze")
        if not self.seeds:
            raise ValueError("need at least one replication seed")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")


@dataclass(frozen=True)
class OutcomeRecord:
    seed: int
    method: str
    cycle: int
    der: str
    outcome: str
    week: int | None = None  # absolute week of the failure or PM
    unused_life: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


METRIC_LABELS = (
    "Exported Power", "Imported Power", "Exchanged Power", "Curtailed NCL", "Curtailed CL",
    "Curtailed WTs Power", "Curtailed PVs Power", "# Preventive", "# Corrective",
    "# Total Outages", "# Crew Visits", "Unused Life (wks)", "Maintenance Cost",
    "Operational Cost", "Total Cost",
)


@dataclass
class MetricsReport:
    """Reliability, cost and power-flow metrics of one evaluation run (or an average)."""

    n_pm: float = 0.0
    n_cm: float = 0.0
    n_crew: float = 0.0
    unused_life: float = 0.0
    maintenance_cost: float = 0.0
    operational_cost: float = 0.0
    # energy totals (MWh) behind the percentages
    wind_potential: float = 0.0
    wind_used: float = 0.0
    solar_potential: float = 0.0
    solar_used: float = 0.0
    imported: float = 0.0
    import_capacity: float = 0.0
    exported: float = 0.0
    export_capacity: float = 0.0
    exchanged: float = 0.0
    exchange_capacity: float = 0.0
    crit_demand: float = 0.0
    crit_curtailed: float = 0.0
    noncrit_demand: float = 0.0
    noncrit_curtailed: float = 0.0

    @property
    def n_outages(self) -> float:
        return self.n_pm + self.n_cm

    @property
    def total_cost(self) -> float:
        return self.maintenance_cost + self.operational_cost

    @staticmethod
    def _pct(num: float, den: float) -> float:
        return 0.0 if den <= 0 else min(max(100.0 * num / den, 0.0), 100.0)

    def percentages(self) -> dict:
        p = self._pct
        return {
            "Exported Power": p(self.exported, self.export_capacity),
            "Imported Power": p(self.imported, self.import_capacity),
            "Exchanged Power": p(self.exchanged, self.exchange_capacity),
            "Curtailed NCL": p(self.noncrit_curtailed, self.noncrit_demand),
            "Curtailed CL": p(self.crit_curtailed, self.crit_demand),
            "Curtailed WTs Power": p(self.wind_potential - self.wind_used, self.wind_potential),
            "Curtailed PVs Power": p(self.solar_potential - self.solar_used, self.solar_potential),
        }

    def rows(self) -> list[tuple[str, float]]:
        """Metric rows in table order."""
        vals = self.percentages()
        vals.update({"# Preventive": self.n_pm, "# Corrective": self.n_cm,
                     "# Total Outages": self.n_outages, "# Crew Visits": self.n_crew,
                     "Unused Life (wks)": self.unused_life,
                     "Maintenance Cost": self.maintenance_cost,
                     "Operational Cost": self.operational_cost, "Total Cost": self.total_cost})
        return [(label, float(vals[label])) for label in METRIC_LABELS]

    @classmethod
    def mean(cls, reports: list["MetricsReport"]) -> "MetricsReport":
        if not reports:
            raise ValueError("nothing to average")
        return cls(**{f.name: float(np.mean([getattr(r, f.name) for r in reports]))
                      for f in fields(cls)})

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def reports_to_csv(reports: dict[str, MetricsReport]) -> str:
    """``Metrics,<method>...`` table with one row per metric label."""
    methods = [m for m in (PERIODIC, SD_IOM) if m in reports] + \
        [m for m in reports if m not in METHODS]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["Metrics"] + [METHOD_LABELS.get(m, m) for m in methods])
    table = {m: dict(reports[m].rows()) for m in methods}
    for label in METRIC_LABELS:
        w.writerow([label] + [repr(table[m][label]) for m in methods])
    return buf.getvalue()


def reports_from_csv(text: str) -> dict[str, dict[str, float]]:
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0][1:]
    back = {v: k for k, v in METHOD_LABELS.items()}
    out = {back.get(h, h): {} for h in header}
    for row in rows[1:]:
        for h, v in zip(header, row[1:]):
            out[back.get(h, h)][row[0]] = float(v)
    return out


def reports_summary(reports: dict[str, MetricsReport]) -> str:
    """Aligned plain-text table of the same rows as the CSV."""
    methods = [m for m in (PERIODIC, SD_IOM) if m in reports]
    width = max(len(s) for s in METRIC_LABELS) + 2
    lines = ["Metrics".ljust(width) + "".join(METHOD_LABELS[m].rjust(16) for m in methods)]
    table = {m: dict(reports[m].rows()) for m in methods}
    for label in METRIC_LABELS:
        cells = []
        for m in methods:
            v = table[m][label]
            cells.append((f"{v:.2f}%" if label.endswith(("Power", "NCL", "CL")) else f"{v:,.2f}")
                         .rjust(16))
        lines.append(label.ljust(width) + "".join(cells))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- periodic benchmark

def periodic_windows(system: MMGSystem, ages: dict[str, int], T: int | None = None,
                     window: tuple = PERIODIC_WINDOW) -> dict[str, list[int]]:
    """Weeks in which each DER's age falls inside ``window``.

    A DER whose window starts beyond the horizon gets no PM this cycle; one
    already past the window is maintained as early as possible.
    """
    T = system.T if T is None else T
    lo_age, hi_age = window
    out = {}
    for d in system.operational:
        a = ages.get(d.id, d.age)
        if a >= hi_age:  # already past the window by week 1
            out[d.id] = list(range(1, min(T, hi_age - lo_age + 1) + 1))
        else:
            out[d.id] = [t for t in range(max(1, lo_age - a), min(T, hi_age - a) + 1)]
    return out


def zero_cost_curves(system: MMGSystem, T: int) -> dict[str, CostCurve]:
    return {d.id: CostCurve(np.zeros(T), d.pm_cost, d.cm_cost) for d in system.ders}


def periodic_schedule(system: MMGSystem, ages: dict[str, int] | None = None,
                      scenarios: ScenarioSet | None = None,
                      config: LShapedConfig | None = None) -> MaintenanceSchedule:
    """Age-window schedule with zero dynamic costs.

    Without ``scenarios`` only the crew problem is solved; with them the
    operations enter through the decomposition, as for the sensor-driven plan.
    """
    ages = {d.id: d.age for d in system.ders} if ages is None else ages
    windows = periodic_windows(system, ages)
    curves = zero_cost_curves(system, system.T)
    if scenarios is not None:
        return run_lshaped(system, scenarios, curves, config=config, windows=windows).schedule
    # with nothing else to trade off, prefer the earliest week of each window
    early = {d.id: CostCurve(1e-6 * np.arange(1, system.T + 1), d.pm_cost, d.cm_cost)
             for d in system.ders}
    master = build_master(system, early, windows=windows)
    sol = solve_mip(master.lp, backend=(config or LShapedConfig()).master_backend)
    if not sol.has_incumbent:
        raise RuntimeError(f"periodic schedule: master returned {sol.status}")
    return MaintenanceSchedule.from_values(dict(zip(master.lp.col_names, sol.x)))


# ---------------------------------------------------------------- resilience

@dataclass
class ResilienceInput:
    """Per-week performance as planned (``planned``) and under disruption (``disrupted``).

    ``orientation="cost"`` measures loss as ``1 - planned/disrupted`` (costs
    rise under disruption); ``"load"`` uses ``1 - disrupted/planned`` (served
    fractions fall).  Weeks past the end of the arrays contribute no loss.
    """

    planned: np.ndarray
    disrupted: np.ndarray
    probabilities: np.ndarray
    duration: int = 1
    orientation: str = "cost"

    def __post_init__(self):
        self.planned = np.asarray(self.planned, float)
        self.disrupted = np.asarray(self.disrupted, float)
        self.probabilities = np.asarray(self.probabilities, float)
        if self.planned.shape != self.disrupted.shape:
            raise ValueError("planned and disrupted series differ in length")
        if self.duration < 1:
            raise ValueError("duration must be >= 1")
        if np.any(self.probabilities < 0) or self.probabilities.sum() > 1 + 1e-12:
            raise ValueError("disruption probabilities must be >= 0 and sum to at most 1")
        if self.orientation not in ("cost", "load"):
            raise ValueError("orientation must be 'cost' or 'load'")

    def loss(self) -> np.ndarray:
        """``1 - Psi`` per week."""
        if self.orientation == "cost":
            if np.any(self.disrupted == 0):
                raise ValueError("disrupted cost is zero; resilience undefined")
            return 1.0 - self.planned / self.disrupted
        out = np.zeros_like(self.planned)
        served = self.planned > 0
        out[served] = 1.0 - self.disrupted[served] / self.planned[served]
        return out

    def resilience(self) -> np.ndarray:
        return 1.0 - self.loss()


def compute_erl(inp: ResilienceInput, T: int | None = None) -> float:
    """Expected resilience loss over weeks ``1..T`` with an inclusive disruption window."""
    loss = inp.loss()
    T = len(inp.probabilities) if T is None else T
    if len(inp.probabilities) < T:
        raise ValueError("need a disruption probability for every week")
    total = 0.0
    for t in range(1, T + 1):
        p = inp.probabilities[t - 1]
        if p == 0.0:
            continue
        inner = 0.0
        for t0 in range(t, t + inp.duration + 1):
            if t0 <= len(loss):
                inner += loss[t0 - 1]
        total += p * inner
    return float(total / inp.duration)


@dataclass
class WeekOutcome:
    """Realized operations of one week."""

    cost: float
    crit_demand: float
    crit_curtailed: float
    noncrit_demand: float
    noncrit_curtailed: float

    @property
    def crit_served(self) -> float:
        return 1.0 if self.crit_demand <= 0 else 1.0 - self.crit_curtailed / self.crit_demand

    @property
    def noncrit_served(self) -> float:
        return 1.0 if self.noncrit_demand <= 0 else 1.0 - self.noncrit_curtailed / self.noncrit_demand


def operating_system(system: MMGSystem) -> MMGSystem:
    """Copy with every DER marked operational; outages enter as availability instead."""
    out = system.copy()
    for d in out.ders:
        d.status = OPERATIONAL
    return out


def solve_week(system: MMGSystem, scenarios: ScenarioSet, week: int, availability: dict,
               backend: str = "highs", gap: float = 1e-7, audit=None):
    """Exact operations of one realized week (first scenario of ``scenarios``).

    Returns ``(WeekOutcome, handle, x)``.
    """
    h = build_subproblem(system, scenarios, week, [0], weighted=False, availability=availability,
                         master_columns=set())
    sol = solve_mip(h.lp, gap=gap, backend=backend)
    if not sol.has_incumbent:
        raise RuntimeError(f"week {week} operations returned {sol.status}")
    if audit is not None:
        audit(h, sol.x, h.base_rhs)
    x = sol.x
    I = h.index
    mi = {m: k for k, m in enumerate(scenarios.mg_ids)}
    out = WeekOutcome(float(sol.objective), 0.0, 0.0, 0.0, 0.0)
    for m in system.mg_ids:
        out.crit_demand += float(scenarios.d_crit[0, mi[m], week - 1].sum())
        out.noncrit_demand += float(scenarios.d_noncrit[0, mi[m], week - 1].sum())
        for hh in range(1, system.H + 1):
            out.crit_curtailed += float(x[I[("psic", m, week, hh, 0)]])
            out.noncrit_curtailed += float(x[I[("psin", m, week, hh, 0)]])
    return out, h, x


def _accumulate(report: MetricsReport, system: MMGSystem, scenarios: ScenarioSet, week: int,
                outcome: WeekOutcome, h, x) -> None:
    I = h.index
    H = system.H
    grid_on = scenarios.mode(week) == GRID_CONNECTED
    links_on = scenarios.mode(week) != ISLANDED
    report.operational_cost += outcome.cost
    report.crit_demand += outcome.crit_demand
    report.crit_curtailed += outcome.crit_curtailed
    report.noncrit_demand += outcome.noncrit_demand
    report.noncrit_curtailed += outcome.noncrit_curtailed
    for mg in system.microgrids:
        for hh in range(1, H + 1):
            report.imported += float(x[I[("ygp", mg.id, week, hh, 0)]])
            report.exported += float(x[I[("ygs", mg.id, week, hh, 0)]])
            for l in system.neighbors(mg.id):
                report.exchanged += float(x[I[("yp", mg.id, l, week, hh, 0)]])
        if grid_on:
            report.import_capacity += mg.grid_buy_max * H
            report.export_capacity += mg.grid_sell_max * H
        if links_on:
            report.exchange_capacity += sum(system.link(mg.id, l).buy_max
                                            for l in system.neighbors(mg.id)) * H
    for d in system.renewables:
        pot = float(scenarios.renewable[d.id][0, week - 1].sum())
        used = sum(float(x[I[("y", d.id, week, hh, 0)]]) for hh in range(1, H + 1))
        if d.tech == "solar":
            report.solar_potential += pot
            report.solar_used += used
        else:
            report.wind_potential += pot
            report.wind_used += used


def schedule_availability(system: MMGSystem, schedule: MaintenanceSchedule, T: int) -> list[dict]:
    """Per-week availability (index 0 = week 1) implied by a maintenance schedule."""
    weeks = [dict() for _ in range(T)]
    for d in system.ders:
        if d.id in schedule.pm:
            start, dur = schedule.pm[d.id], d.pm_duration
        elif d.id in schedule.cm:
            start, dur = schedule.cm[d.id], d.cm_duration
        else:
            if d.status != OPERATIONAL:
                for t in range(T):
                    weeks[t][d.id] = False
            continue
        first = 1 if d.status != OPERATIONAL else start
        for t in range(first, min(start + dur - 1, T) + 1):
            weeks[t - 1][d.id] = False
    return weeks


@dataclass
class DisruptionResult:
    mode: str
    planned: list  # WeekOutcome per week
    disrupted: list
    erl: dict  # metric -> ERL

    def inputs(self, metric: str, T: int | None = None) -> ResilienceInput:
        T = len(self.planned) if T is None else T
        p = np.full(T, 1.0 / T)
        if metric == METRIC_COST:
            return ResilienceInput([w.cost for w in self.planned], [w.cost for w in self.disrupted],
                                   p, 1, "cost")
        attr = "crit_served" if metric == METRIC_CRITICAL else "noncrit_served"
        return ResilienceInput([getattr(w, attr) for w in self.planned],
                               [getattr(w, attr) for w in self.disrupted], p, 1, "load")

    def plot_rows(self, metric: str = METRIC_COST) -> list[tuple[int, float]]:
        """(week, resilience) pairs for external plotting."""
        psi = self.inputs(metric).resilience()
        return [(t + 1, float(v)) for t, v in enumerate(psi)]


def disruption_study(system: MMGSystem, scenarios: ScenarioSet, schedule, mode: str,
                     metrics=RESILIENCE_METRICS, weeks: int | None = None,
                     backend: str = "highs") -> DisruptionResult:
    """ERL of a schedule when a one-week disruption of ``mode`` may hit any week.

    ``schedule`` is a MaintenanceSchedule or a per-week availability list.
    Each week is solved as planned and under the disrupted mode on the first
    scenario of ``scenarios``; p_t is uniform and the duration is one week.
    """
    T = weeks or scenarios.T
    avail = schedule_availability(system, schedule, T) if isinstance(schedule, MaintenanceSchedule) \
        else list(schedule)
    if len(avail) < T:
        raise ValueError("availability shorter than the study span")
    ops = operating_system(system)
    base = set_connectivity(scenarios, range(1, T + 1), GRID_CONNECTED)
    hit = set_connectivity(scenarios, range(1, T + 1), mode)
    planned, disrupted = [], []
    for t in range(1, T + 1):
        planned.append(solve_week(ops, base, t, avail[t - 1], backend)[0])
        disrupted.append(solve_week(ops, hit, t, avail[t - 1], backend)[0]
                         if mode != GRID_CONNECTED else planned[-1])
    res = DisruptionResult(mode, planned, disrupted, {})
    res.erl = {m: compute_erl(res.inputs(m, T), T) for m in metrics}
    return res


def erl_table_csv(table: dict) -> str:
    """``table[(mode, method)][metric] -> ERL`` as a metric-by-column CSV in percent."""
    methods = [m for m in (PERIODIC, SD_IOM)] + sorted({m for _, m in table} - set(METHODS))
    cols = [(mode, m) for mode in (GRID_CONNECTED, LOCALLY_CONNECTED, ISLANDED) for m in methods
            if (mode, m) in table]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["Metric"] + [f"{MODE_LABELS[mode]} / {METHOD_LABELS.get(m, m)}" for mode, m in cols])
    for metric in RESILIENCE_METRICS:
        w.writerow([RESILIENCE_LABELS[metric]] + [repr(100.0 * float(table[c][metric])) for c in cols])
    return buf.getvalue()


# ---------------------------------------------------------------- rolling horizon

def _seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


@dataclass
class _Component:
    """Hidden truth for the part currently installed in one DER."""

    traj: np.ndarray
    failure_age: int | None
    age: int = 0
    renewals: int = 0
    busy_until: int = 0  # absolute week the current outage ends (inclusive)

    def observations(self) -> list[tuple[float, float]]:
        return [(float(k), float(self.traj[k])) for k in range(1, self.age + 1)]


@dataclass
class RollingResult:
    reports: dict  # method -> averaged MetricsReport
    per_seed: dict  # method -> list of MetricsReport
    outcomes: list
    availability: dict  # (method, seed) -> list of per-week availability dicts
    truth: dict  # seed -> realized ScenarioSet (one scenario over the span)
    schedules: dict = field(default_factory=dict)  # (method, seed, cycle) -> MaintenanceSchedule

    def outcome_log(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.outcomes)


def cycle_outcome(pm_week: int | None, failure_week: int | None) -> tuple[str, int | None, int]:
    """``(outcome, event week, unused life)`` of one DER given its planned PM and true failure.

    A failure due in the PM week itself is preempted by the PM.
    """
    if pm_week is not None and (failure_week is None or pm_week <= failure_week):
        return PLANNED_MAINTENANCE, pm_week, 0 if failure_week is None else failure_week - pm_week
    if failure_week is not None:
        return UNEXPECTED_FAILURE, failure_week, 0
    return UNINTERRUPTED, None, 0


def _draw_component(model: DegradationModel, cfg: RollingConfig, seed: int, der_index: int,
                    renewal: int) -> _Component:
    traj, fail = simulate_signal(model, _seed(seed, der_index, renewal), cfg.signal_horizon)
    return _Component(traj, fail, 0, renewal)


def _plan(method: str, system: MMGSystem, models: dict, parts: dict, scen: ScenarioSet,
          cfg: RollingConfig, store: dict, audit=None) -> MaintenanceSchedule:
    T = cfg.T
    plan_sys = system.copy()
    plan_sys.T = T
    for d in plan_sys.ders:
        d.status = OPERATIONAL
        d.age = parts[d.id].age
    if method == PERIODIC:
        windows = crew_feasible_windows(
            plan_sys, periodic_windows(plan_sys, {d.id: d.age for d in plan_sys.ders}, T))
        return run_lshaped(plan_sys, scen, zero_cost_curves(plan_sys, T), config=cfg.lshaped,
                           windows=windows, exact_store=store, audit=audit).schedule
    curves, deadlines = {}, {}
    for d in plan_sys.ders:
        st = DegradationState.from_history(models[d.id], parts[d.id].observations(), T,
                                           d.pm_cost, d.cm_cost)
        curves[d.id] = st.cost if st.cost is not None else CostCurve(np.zeros(T), d.pm_cost, d.cm_cost)
        deadlines[d.id] = maintenance_deadline(st.rld, d.reliability, T)
    windows = crew_feasible_windows(plan_sys, pm_windows(plan_sys, deadlines))
    return run_lshaped(plan_sys, scen, curves, config=cfg.lshaped, windows=windows,
                       exact_store=store, audit=audit).schedule


def _replicate(method: str, system: MMGSystem, models: dict, cfg: RollingConfig, seed: int,
               truth: ScenarioSet, plan: ScenarioSet, ages: dict, audit=None, store=None):
    ops = operating_system(system)
    parts = {}
    for i, d in enumerate(system.ders):
        parts[d.id] = _draw_component(models[d.id], cfg, seed, i, 0)
        parts[d.id].age = ages[d.id]
    index = {d.id: i for i, d in enumerate(system.ders)}
    report = MetricsReport()
    outcomes, availability, schedules = [], [], {}
    crew_weeks = set()
    start, cycle = 1, 0
    while start <= cfg.span:
        cycle += 1
        sched = _plan(method, system, models, parts, plan, cfg, {} if store is None else store,
                      audit)
        schedules[cycle] = sched
        last = min(start + cfg.freeze - 1, cfg.span)
        first_event = {}
        for week in range(start, last + 1):
            avail = {}
            for d in system.ders:
                part = parts[d.id]
                if part.busy_until >= week:
                    avail[d.id] = False
                    crew_weeks.add((d.microgrid, week))
                    if part.busy_until == week:
                        parts[d.id] = part = _draw_component(models[d.id], cfg, seed, index[d.id],
                                                             part.renewals + 1)
                    continue
                rel = week - start + 1
                fail_now = part.failure_age is not None and part.failure_age <= part.age + 1
                if sched.pm.get(d.id) == rel:
                    due = None if part.failure_age is None else \
                        week + part.failure_age - (part.age + 1)
                    unused = cycle_outcome(week, due)[2]
                    report.n_pm += 1
                    report.maintenance_cost += d.pm_cost
                    report.unused_life += unused
                    first_event.setdefault(d.id, (PLANNED_MAINTENANCE, week, unused))
                    part.busy_until = week + d.pm_duration - 1
                elif fail_now:
                    report.n_cm += 1
                    report.maintenance_cost += d.cm_cost
                    first_event.setdefault(d.id, (UNEXPECTED_FAILURE, week, 0))
                    part.busy_until = week + d.cm_duration - 1
                else:
                    part.age += 1
                    continue
                avail[d.id] = False
                crew_weeks.add((d.microgrid, week))
                if part.busy_until == week:
                    parts[d.id] = _draw_component(models[d.id], cfg, seed, index[d.id],
                                                  part.renewals + 1)
            availability.append(avail)
            outcome, h, x = solve_week(ops, truth, week, avail, cfg.lshaped.mip_backend,
                                       cfg.lshaped.mip_gap, audit)
            _accumulate(report, ops, truth, week, outcome, h, x)
        for d in system.ders:
            cls, wk, unused = first_event.get(d.id, (UNINTERRUPTED, None, 0))
            outcomes.append(OutcomeRecord(seed, method, cycle, d.id, cls, wk, unused))
        start = last + 1
    report.n_crew = float(len(crew_weeks))
    report.maintenance_cost += sum(system.mg(m).crew_cost for m, _ in crew_weeks)
    return report, outcomes, availability, schedules


def initial_ages(system: MMGSystem, seed: int, age_range=(0, 50)) -> dict[str, int]:
    rng = np.random.default_rng(_seed(seed, 104729))
    lo, hi = age_range
    return {d.id: int(rng.integers(lo, hi + 1)) for d in system.ders}


def run_rolling_horizon(system: MMGSystem, models: dict, config: RollingConfig | None = None,
                        generator: GeneratorSpec | None = None, audit=None) -> RollingResult:
    """Plan, freeze, simulate and re-plan over ``config.span`` weeks for each method and seed.

    ``generator`` describes planning scenarios (its ``T`` is overridden by the
    plan horizon); the realized trace is one draw of the same generator over
    the whole span.  The planning forecast is drawn once per seed and reused by
    every cycle and both methods, so exact weekly operating costs are shared
    between their runs.  ``audit(handle, x, rhs)`` sees every realized week and
    every exact planning solve.
    """
    cfg = config or RollingConfig()
    missing = [d.id for d in system.ders if d.id not in models]
    if missing:
        raise ValueError(f"no degradation model for {missing}")
    gen = generator or GeneratorSpec.from_system(system, cfg.n_scenarios)
    plan_spec = GeneratorSpec(**{**gen.__dict__, "T": cfg.T, "n_scenarios": cfg.n_scenarios})
    truth_spec = GeneratorSpec(**{**gen.__dict__, "T": cfg.span, "n_scenarios": 1})
    per_seed = {m: [] for m in cfg.methods}
    outcomes, availability, truths, schedules = [], {}, {}, {}
    for seed in cfg.seeds:
        truth = generate_scenarios(truth_spec, _seed(seed, 31337))
        truths[seed] = truth
        ages = initial_ages(system, seed, cfg.initial_age_range)
        plan = generate_scenarios(plan_spec, _seed(seed, 7919))
        store = {}
        for method in cfg.methods:
            rep, outs, avail, scheds = _replicate(method, system, models, cfg, seed, truth,
                                                  plan, ages, audit, store)
            per_seed[method].append(rep)
            outcomes.extend(outs)
            availability[(method, seed)] = avail
            for c, s in scheds.items():
                schedules[(method, seed, c)] = s
    reports = {m: MetricsReport.mean(per_seed[m]) for m in cfg.methods}
    return RollingResult(reports, per_seed, outcomes, availability, truths, schedules)


def resilience_study(system: MMGSystem, result: RollingResult, modes=(LOCALLY_CONNECTED, ISLANDED),
                     weeks: int | None = None, backend: str = "highs") -> dict:
    """Average ERL per (mode, method) over the realized availability of each replication."""
    ops = operating_system(system)
    table = {}
    for mode in modes:
        for (method, seed), avail in sorted(result.availability.items()):
            truth = result.truth[seed]
            T = min(weeks or len(avail), len(avail))
            res = disruption_study(ops, truth, avail, mode, weeks=T, backend=backend)
            cell = table.setdefault((mode, method), {m: [] for m in RESILIENCE_METRICS})
            for m in RESILIENCE_METRICS:
                cell[m].append(res.erl[m])
    return {k: {m: float(np.mean(v)) for m, v in cell.items()} for k, cell in table.items()}


__all__ = [
    "DisruptionResult", "METHODS", "MetricsReport", "OUTCOMES", "OutcomeRecord", "PERIODIC",
    "PLANNED_MAINTENANCE", "RESILIENCE_METRICS", "ResilienceInput", "RollingConfig",
    "RollingResult", "SD_IOM", "METRIC_LABELS", "UNEXPECTED_FAILURE", "UNINTERRUPTED",
    "WeekOutcome", "compute_erl", "cycle_outcome", "disruption_study", "erl_table_csv", "initial_ages",
    "operating_system", "periodic_schedule", "periodic_windows", "reports_from_csv",
    "reports_summary", "reports_to_csv", "resilience_study", "run_rolling_horizon",
    "schedule_availability", "solve_week", "zero_cost_curves",
]

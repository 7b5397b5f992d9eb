"""Multi-microgrid system data, scenario sets, validation and file formats."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

RENEWABLE, NON_RENEWABLE = "renewable", "non-renewable"
OPERATIONAL, FAILED = "operational", "failed"
GRID_CONNECTED, LOCALLY_CONNECTED, ISLANDED = "grid-connected", "locally-connected", "islanded"
MODES = (GRID_CONNECTED, LOCALLY_CONNECTED, ISLANDED)


@dataclass
class Der:
    id: str
    microgrid: str
    kind: str
    tech: str = ""  # "wind", "solar", "conventional"; used for reporting and generation
    status: str = OPERATIONAL
    pm_duration: int = 1
    cm_duration: int | None = None
    p_max: float = 0.0
    p_min: float = 0.0
    ramp_up: float = math.inf
    ramp_down: float = math.inf
    min_up: int = 1
    min_down: int = 1
    no_load_cost: float = 0.0
    marginal_cost: float = 0.0
    start_cost: float = 0.0
    stop_cost: float = 0.0
    pm_cost: float = 1.0
    cm_cost: float = 2.0
    reliability: float = 0.5
    degradation: str | None = None
    age: int = 0

    def __post_init__(self):
        if self.cm_duration is None:
            self.cm_duration = 2 * self.pm_duration

    @property
    def renewable(self) -> bool:
        return self.kind == RENEWABLE


@dataclass
class Battery:
    id: str
    microgrid: str
    soc_min: float
    soc_max: float
    charge_max: float
    discharge_max: float
    efficiency: float = 1.0
    soc_init: float | None = None

    @property
    def initial_soc(self) -> float:
        return self.soc_min if self.soc_init is None else self.soc_init


@dataclass
class Microgrid:
    id: str
    grid_buy_max: float = 0.0
    grid_sell_max: float = 0.0
    crew_cost: float = 0.0


@dataclass
class MgLink:
    """Directed trading limits: ``a`` may buy up to ``buy_max`` from and sell up to ``sell_max`` to ``b``."""

    a: str
    b: str
    buy_max: float
    sell_max: float


@dataclass
class MMGSystem:
    microgrids: list[Microgrid]
    ders: list[Der]
    batteries: list[Battery] = field(default_factory=list)
    links: list[MgLink] = field(default_factory=list)
    loss: float = 0.0
    T: int = 4
    H: int = 168
    name: str = "mmg"

    # ------------------------------------------------------------ lookups
    @property
    def mg_ids(self) -> list[str]:
        return [m.id for m in self.microgrids]

    def mg(self, mg_id: str) -> Microgrid:
        return next(m for m in self.microgrids if m.id == mg_id)

    def der(self, der_id: str) -> Der:
        return next(d for d in self.ders if d.id == der_id)

    def ders_in(self, mg_id: str) -> list[Der]:
        return [d for d in self.ders if d.microgrid == mg_id]

    def batteries_in(self, mg_id: str) -> list[Battery]:
        return [b for b in self.batteries if b.microgrid == mg_id]

    def neighbors(self, mg_id: str) -> list[str]:
        return [lk.b for lk in self.links if lk.a == mg_id]

    def link(self, a: str, b: str) -> MgLink:
        return next(lk for lk in self.links if lk.a == a and lk.b == b)

    @property
    def renewables(self) -> list[Der]:
        return [d for d in self.ders if d.renewable]

    @property
    def operational(self) -> list[Der]:
        return [d for d in self.ders if d.status == OPERATIONAL]

    @property
    def failed(self) -> list[Der]:
        return [d for d in self.ders if d.status == FAILED]

    def copy(self) -> "MMGSystem":
        return system_from_dict(system_to_dict(self))

    # ------------------------------------------------------------ I/O
    def to_json(self) -> str:
        return json.dumps(system_to_dict(self), indent=2, sort_keys=True) + "\n"


def system_to_dict(s: MMGSystem) -> dict:
    return {
        "name": s.name, "T": s.T, "H": s.H, "loss": s.loss,
        "microgrids": [asdict(m) for m in s.microgrids],
        "ders": [asdict(d) for d in s.ders],
        "batteries": [asdict(b) for b in s.batteries],
        "links": [asdict(lk) for lk in s.links],
    }


def system_from_dict(d: dict) -> MMGSystem:
    return MMGSystem(
        microgrids=[Microgrid(**m) for m in d["microgrids"]],
        ders=[Der(**x) for x in d["ders"]],
        batteries=[Battery(**b) for b in d.get("batteries", [])],
        links=[MgLink(**lk) for lk in d.get("links", [])],
        loss=d.get("loss", 0.0), T=d["T"], H=d["H"], name=d.get("name", "mmg"))


def read_system(path) -> MMGSystem:
    return system_from_dict(json.loads(Path(path).read_text()))


def write_system(system: MMGSystem, path) -> None:
    Path(path).write_text(system.to_json())


# ---------------------------------------------------------------- scenarios

@dataclass
class ScenarioSet:
    """Per-scenario data over (microgrid, week, hour).

    Load and price arrays have shape ``(n_scenarios, M, T, H)`` with
    microgrids ordered as ``mg_ids``; ``renewable[der]`` has shape
    ``(n_scenarios, T, H)``.  Penalties are per microgrid and connectivity
    is one mode per week.
    """

    probabilities: np.ndarray
    mg_ids: list[str]
    d_crit: np.ndarray
    d_noncrit: np.ndarray
    price_buy: np.ndarray
    price_sell: np.ndarray
    renewable: dict[str, np.ndarray]
    penalty_crit: np.ndarray
    penalty_noncrit: np.ndarray
    connectivity: list[str] = None

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, float)
        if self.connectivity is None:
            self.connectivity = [GRID_CONNECTED] * self.T

    @property
    def n(self) -> int:
        return len(self.probabilities)

    @property
    def T(self) -> int:
        return self.d_crit.shape[2]

    @property
    def H(self) -> int:
        return self.d_crit.shape[3]

    def mg_index(self, mg_id: str) -> int:
        return self.mg_ids.index(mg_id)

    def mode(self, week: int) -> str:
        """Connectivity mode of week ``week`` (1-based)."""
        return self.connectivity[week - 1]

    def weeks(self, start: int, count: int) -> "ScenarioSet":
        """Slice weeks ``start..start+count-1`` (1-based) into a new set."""
        sl = slice(start - 1, start - 1 + count)
        return ScenarioSet(self.probabilities.copy(), list(self.mg_ids),
                           self.d_crit[:, :, sl].copy(), self.d_noncrit[:, :, sl].copy(),
                           self.price_buy[:, :, sl].copy(), self.price_sell[:, :, sl].copy(),
                           {k: v[:, sl].copy() for k, v in self.renewable.items()},
                           self.penalty_crit.copy(), self.penalty_noncrit.copy(),
                           list(self.connectivity[sl]))

    def scenario(self, k: int, probability: float = 1.0) -> "ScenarioSet":
        """Single scenario ``k`` as its own set."""
        s = slice(k, k + 1)
        return ScenarioSet(np.array([probability]), list(self.mg_ids), self.d_crit[s].copy(),
                           self.d_noncrit[s].copy(), self.price_buy[s].copy(),
                           self.price_sell[s].copy(), {d: v[s].copy() for d, v in self.renewable.items()},
                           self.penalty_crit.copy(), self.penalty_noncrit.copy(),
                           list(self.connectivity))

    def copy(self) -> "ScenarioSet":
        return self.weeks(1, self.T)


def set_connectivity(scenarios: ScenarioSet, weeks, mode: str) -> ScenarioSet:
    """Return a copy with the given (1-based) weeks switched to ``mode``."""
    if mode not in MODES:
        raise ValueError(f"unknown connectivity mode {mode!r}")
    out = scenarios.copy()
    for t in weeks:
        if not 1 <= t <= out.T:
            raise ValueError(f"week {t} outside 1..{out.T}")
        out.connectivity[t - 1] = mode
    return out


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class Violation:
    code: str
    detail: str


def validate(system: MMGSystem, scenarios: ScenarioSet | None = None) -> list[Violation]:
    """Every invariant violation found; an empty list means well-formed."""
    out: list[Violation] = []

    def bad(code, detail):
        out.append(Violation(code, detail))

    ids = system.mg_ids
    if len(set(ids)) != len(ids):
        bad("duplicate-id", "microgrid ids repeat")
    all_ids = [d.id for d in system.ders] + [b.id for b in system.batteries]
    if len(set(all_ids)) != len(all_ids):
        bad("duplicate-id", "DER/battery ids repeat")
    if not 0 <= system.loss < 1:
        bad("loss-fraction", f"loss {system.loss} outside [0, 1)")
    if system.T < 1 or system.H < 1:
        bad("horizon", "T and H must be >= 1")
    for m in system.microgrids:
        if min(m.grid_buy_max, m.grid_sell_max, m.crew_cost) < 0:
            bad("negative-limit", f"microgrid {m.id}")
    pairs = {(lk.a, lk.b) for lk in system.links}
    for lk in system.links:
        if lk.a not in ids or lk.b not in ids:
            bad("unknown-microgrid", f"link {lk.a}->{lk.b}")
        if lk.a == lk.b:
            bad("topology-self-loop", f"link {lk.a}->{lk.b}")
        if min(lk.buy_max, lk.sell_max) < 0:
            bad("negative-limit", f"link {lk.a}->{lk.b}")
        if (lk.b, lk.a) not in pairs:
            bad("topology-asymmetric", f"{lk.a}->{lk.b} has no reverse link")
    if len(pairs) != len(system.links):
        bad("duplicate-id", "repeated link")
    for d in system.ders:
        if d.microgrid not in ids:
            bad("unknown-microgrid", f"DER {d.id}")
        if d.kind not in (RENEWABLE, NON_RENEWABLE):
            bad("der-kind", f"DER {d.id}: {d.kind!r}")
        if d.status not in (OPERATIONAL, FAILED):
            bad("der-status", f"DER {d.id}: {d.status!r}")
        if d.pm_duration < 1 or d.cm_duration < 1:
            bad("maintenance-duration", f"DER {d.id}")
        if not 0 < d.reliability < 1:
            bad("reliability-threshold", f"DER {d.id}")
        if not 0 < d.pm_cost <= d.cm_cost:
            bad("maintenance-cost", f"DER {d.id}: need 0 < C^p <= C^f")
        if d.kind == NON_RENEWABLE:
            if not 0 <= d.p_min <= d.p_max:
                bad("der-bounds", f"DER {d.id}: need 0 <= p_min <= p_max")
            if d.min_up < 1 or d.min_down < 1:
                bad("min-up-down", f"DER {d.id}")
            if min(d.ramp_up, d.ramp_down) < 0:
                bad("negative-limit", f"DER {d.id} ramp")
    for b in system.batteries:
        if b.microgrid not in ids:
            bad("unknown-microgrid", f"battery {b.id}")
        if not 0 <= b.soc_min <= b.soc_max:
            bad("battery-soc", f"battery {b.id}")
        if not 0 < b.efficiency <= 1:
            bad("battery-efficiency", f"battery {b.id}")
        if min(b.charge_max, b.discharge_max) < 0:
            bad("negative-limit", f"battery {b.id}")
        if b.soc_init is not None and not b.soc_min <= b.soc_init <= b.soc_max:
            bad("battery-soc", f"battery {b.id} initial SOC out of range")
    if scenarios is not None:
        out.extend(_validate_scenarios(system, scenarios))
    return out


def _validate_scenarios(system: MMGSystem, sc: ScenarioSet) -> list[Violation]:
    out = []
    if abs(sc.probabilities.sum() - 1.0) > 1e-9:
        out.append(Violation("scenario-prob-sum", f"probabilities sum to {sc.probabilities.sum()!r}"))
    if np.any(sc.probabilities < 0):
        out.append(Violation("scenario-prob-negative", "negative probability"))
    if list(sc.mg_ids) != system.mg_ids:
        out.append(Violation("scenario-shape", "microgrid order differs from the system"))
    shape = (sc.n, len(system.mg_ids), sc.T, sc.H)
    for name in ("d_crit", "d_noncrit", "price_buy", "price_sell"):
        arr = getattr(sc, name)
        if arr.shape != shape:
            out.append(Violation("scenario-shape", f"{name} has shape {arr.shape}, want {shape}"))
        elif np.any(arr < 0) or not np.all(np.isfinite(arr)):
            out.append(Violation("negative-data", f"{name} has negative or non-finite entries"))
    if sc.H != system.H:
        out.append(Violation("scenario-shape", f"scenario H={sc.H} but system H={system.H}"))
    if sc.T < system.T:
        out.append(Violation("scenario-shape", f"scenario covers {sc.T} weeks, system plans {system.T}"))
    for d in system.renewables:
        arr = sc.renewable.get(d.id)
        if arr is None:
            out.append(Violation("scenario-missing-der", f"no capacity series for {d.id}"))
        elif arr.shape != (sc.n, sc.T, sc.H):
            out.append(Violation("scenario-shape", f"capacity of {d.id} has shape {arr.shape}"))
        elif np.any(arr < 0):
            out.append(Violation("negative-data", f"capacity of {d.id}"))
    if np.any(sc.penalty_crit <= sc.penalty_noncrit):
        out.append(Violation("penalty-order", "critical curtailment must cost more than non-critical"))
    if np.any(sc.penalty_noncrit < 0):
        out.append(Violation("negative-data", "negative curtailment penalty"))
    if len(sc.connectivity) != sc.T or any(c not in MODES for c in sc.connectivity):
        out.append(Violation("connectivity-mode", "one valid mode per week required"))
    return out


# ---------------------------------------------------------------- generator

@dataclass
class GeneratorSpec:
    """Parameters of the synthetic scenario generator.

    Per-microgrid load means are in MW; renewable capacities are nameplate MW
    keyed by DER id with their technology ("wind" or "solar").
    """

    mg_ids: list[str]
    T: int
    H: int
    n_scenarios: int = 3
    crit_load: dict = field(default_factory=dict)
    noncrit_load: dict = field(default_factory=dict)
    load_amplitude: float = 0.3
    load_sd: float = 0.05
    renewables: dict = field(default_factory=dict)  # der id -> (tech, nameplate)
    solar_sd: float = 0.1
    wind_mean: float = 0.4
    wind_ar: float = 0.8
    wind_sd: float = 0.1
    price_mean: float = 40.0
    price_amplitude: float = 0.25
    price_sd: float = 3.0
    price_reversion: float = 0.3
    sell_ratio: float = 0.8
    penalty_crit: float = 1000.0
    penalty_noncrit: float = 200.0

    @classmethod
    def from_system(cls, system: MMGSystem, n_scenarios: int = 3, T: int | None = None, **kw):
        crit = kw.pop("crit_load", {m: 1.0 for m in system.mg_ids})
        noncrit = kw.pop("noncrit_load", {m: 1.0 for m in system.mg_ids})
        ren = {d.id: (d.tech or "wind", d.p_max) for d in system.renewables}
        return cls(system.mg_ids, T or system.T, system.H, n_scenarios, crit, noncrit,
                   renewables=ren, **kw)

    def hour_of_day(self) -> np.ndarray:
        h = np.arange(self.H, dtype=float)
        return np.mod(h, 24.0) if self.H >= 24 else h * 24.0 / self.H

    def daylight(self) -> np.ndarray:
        hod = self.hour_of_day()
        return np.where((hod >= 6) & (hod < 18), np.sin(np.pi * (hod - 6) / 12.0), 0.0)

    def load_shape(self) -> np.ndarray:
        hod = self.hour_of_day()
        return 1.0 + self.load_amplitude * np.sin(2 * np.pi * (hod - 9) / 24.0)

    def price_shape(self) -> np.ndarray:
        hod = self.hour_of_day()
        return self.price_mean * (1.0 + self.price_amplitude * np.sin(2 * np.pi * (hod - 8) / 24.0))


def generate_scenarios(spec: GeneratorSpec, seed: int) -> ScenarioSet:
    """Seeded synthetic scenarios.

    Draw order (fixed, so a seed reproduces bit-for-bit): for each scenario,
    for each microgrid, critical then non-critical load noise; then each
    renewable in ``spec.renewables`` order; then each microgrid's price path.
    """
    if spec.n_scenarios < 1:
        raise ValueError("need at least one scenario")
    rng = np.random.default_rng(seed)
    n, M, T, H = spec.n_scenarios, len(spec.mg_ids), spec.T, spec.H
    shape = spec.load_shape()
    dc = np.zeros((n, M, T, H))
    dn = np.zeros((n, M, T, H))
    pb = np.zeros((n, M, T, H))
    ren = {d: np.zeros((n, T, H)) for d in spec.renewables}
    light = spec.daylight()
    pshape = spec.price_shape()
    for w in range(n):
        for k, m in enumerate(spec.mg_ids):
            for arr, mean in ((dc, spec.crit_load.get(m, 0.0)), (dn, spec.noncrit_load.get(m, 0.0))):
                noise = rng.normal(0.0, spec.load_sd, (T, H)) if spec.load_sd > 0 else 0.0
                arr[w, k] = np.maximum(mean * (shape + noise), 0.0)
        for d, (tech, cap) in spec.renewables.items():
            if tech == "solar":
                noise = rng.normal(0.0, spec.solar_sd, (T, H)) if spec.solar_sd > 0 else 0.0
                ren[d][w] = cap * np.clip(light * (1.0 + noise), 0.0, 1.0)
            else:
                path = np.empty(T * H)
                level = spec.wind_mean
                eps = rng.normal(0.0, spec.wind_sd, T * H) if spec.wind_sd > 0 else np.zeros(T * H)
                for i in range(T * H):
                    level = spec.wind_mean + spec.wind_ar * (level - spec.wind_mean) + eps[i]
                    path[i] = level
                ren[d][w] = cap * np.clip(path, 0.0, 1.0).reshape(T, H)
        for k in range(M):
            eps = rng.normal(0.0, spec.price_sd, T * H) if spec.price_sd > 0 else np.zeros(T * H)
            dev = 0.0
            path = np.empty(T * H)
            for i in range(T * H):
                dev = (1.0 - spec.price_reversion) * dev + eps[i]
                path[i] = dev
            pb[w, k] = np.maximum(np.tile(pshape, T) + path, 0.0).reshape(T, H)
    return ScenarioSet(np.full(n, 1.0 / n), list(spec.mg_ids), dc, dn, pb, pb * spec.sell_ratio,
                       ren, np.full(M, spec.penalty_crit), np.full(M, spec.penalty_noncrit))


# ---------------------------------------------------------------- scenario files

def _meta_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".meta.json")


def scenarios_to_csv(sc: ScenarioSet, system: MMGSystem) -> str:
    ders = [d.id for d in system.renewables]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "mg", "week", "hour"] + [f"phi_{d}" for d in ders]
               + ["d_crit", "d_noncrit", "price_buy", "price_sell"])
    owner = {d.id: d.microgrid for d in system.renewables}
    for s in range(sc.n):
        for k, m in enumerate(sc.mg_ids):
            for t in range(sc.T):
                for h in range(sc.H):
                    phis = [repr(float(sc.renewable[d][s, t, h])) if owner[d] == m else ""
                            for d in ders]
                    w.writerow([s + 1, m, t + 1, h + 1] + phis +
                               [repr(float(a[s, k, t, h])) for a in
                                (sc.d_crit, sc.d_noncrit, sc.price_buy, sc.price_sell)])
    return buf.getvalue()


def scenarios_meta(sc: ScenarioSet) -> str:
    meta = {"probabilities": [float(p) for p in sc.probabilities], "mg_ids": list(sc.mg_ids),
            "penalty_crit": [float(x) for x in sc.penalty_crit],
            "penalty_noncrit": [float(x) for x in sc.penalty_noncrit],
            "connectivity": list(sc.connectivity), "T": sc.T, "H": sc.H,
            "renewables": sorted(sc.renewable)}
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"


def write_scenarios(sc: ScenarioSet, system: MMGSystem, path) -> None:
    """Write the CSV plus a ``<stem>.meta.json`` sidecar with probabilities and penalties."""
    Path(path).write_text(scenarios_to_csv(sc, system))
    _meta_path(path).write_text(scenarios_meta(sc))


def read_scenarios(path, meta_path=None) -> ScenarioSet:
    meta = json.loads(Path(meta_path or _meta_path(path)).read_text())
    n, T, H = len(meta["probabilities"]), meta["T"], meta["H"]
    mg_ids = meta["mg_ids"]
    M = len(mg_ids)
    arrays = {k: np.zeros((n, M, T, H)) for k in ("d_crit", "d_noncrit", "price_buy", "price_sell")}
    ren = {d: np.zeros((n, T, H)) for d in meta["renewables"]}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            s, t, h = int(row["scenario"]) - 1, int(row["week"]) - 1, int(row["hour"]) - 1
            k = mg_ids.index(row["mg"])
            for key, arr in arrays.items():
                arr[s, k, t, h] = float(row[key])
            for d in ren:
                v = row.get(f"phi_{d}", "")
                if v != "":
                    ren[d][s, t, h] = float(v)
    return ScenarioSet(np.array(meta["probabilities"]), mg_ids, arrays["d_crit"],
                       arrays["d_noncrit"], arrays["price_buy"], arrays["price_sell"], ren,
                       np.array(meta["penalty_crit"]), np.array(meta["penalty_noncrit"]),
                       list(meta["connectivity"]))


__all__ = ["Battery", "Der", "FAILED", "GRID_CONNECTED", "GeneratorSpec", "ISLANDED",
           "LOCALLY_CONNECTED", "MMGSystem", "MODES", "MgLink", "Microgrid", "NON_RENEWABLE",
           "OPERATIONAL", "RENEWABLE", "ScenarioSet", "Violation", "generate_scenarios",
           "read_scenarios", "read_system", "scenarios_meta", "scenarios_to_csv",
           "set_connectivity", "system_from_dict", "system_to_dict", "validate",
           "write_scenarios", "write_system"]

"""Bundled example systems.

The ``demo_*`` instances are small enough for the deterministic equivalent to
be solved directly (at most 12 first-stage binaries), which makes them the
reference cases for decomposition tests.  ``desk_fleet`` is the larger
two-microgrid fleet used for rolling-horizon studies.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .prognostics import (DegradationModel, DegradationState, maintenance_deadline)
from .system import (FAILED, NON_RENEWABLE, RENEWABLE, Battery, Der, GeneratorSpec, MgLink,
                     Microgrid, MMGSystem, ScenarioSet, generate_scenarios)


@dataclass
class Instance:
    name: str
    system: MMGSystem
    scenarios: ScenarioSet
    cost_curves: dict
    deadlines: dict
    models: dict = field(default_factory=dict)


def conventional(id_, mg, p_max=2.0, p_min=0.5, **kw) -> Der:
    base = dict(ramp_up=1.0, ramp_down=1.0, min_up=2, min_down=2, no_load_cost=20.0,
                marginal_cost=30.0, start_cost=50.0, stop_cost=10.0, pm_cost=400.0, cm_cost=1600.0,
                tech="conventional")
    base.update(kw)
    return Der(id_, mg, NON_RENEWABLE, p_max=p_max, p_min=p_min, **base)


def renewable(id_, mg, tech, p_max=1.5, **kw) -> Der:
    base = dict(pm_cost=300.0, cm_cost=1200.0)
    base.update(kw)
    return Der(id_, mg, RENEWABLE, tech=tech, p_max=p_max, **base)


def battery(id_, mg, units: float = 1.0) -> Battery:
    return Battery(id_, mg, soc_min=0.1 * units, soc_max=2.0 * units, charge_max=0.5 * units,
                   discharge_max=0.5 * units, efficiency=0.95)


def with_storage(system: MMGSystem, units: float) -> MMGSystem:
    """Copy of ``system`` with one battery of ``units`` size per microgrid (none for 0)."""
    out = system.copy()
    out.batteries = [] if units <= 0 else [battery(f"B{m}", m, units) for m in out.mg_ids]
    return out


def hand_count_system() -> MMGSystem:
    """1 MG, 1 conventional unit, 1 battery, H=4 (used for the row/column hand count)."""
    mg = Microgrid("MG1", grid_buy_max=3.0, grid_sell_max=3.0, crew_cost=100.0)
    return MMGSystem([mg], [conventional("CG1", "MG1")], [battery("B1", "MG1")], T=1, H=4,
                     name="hand-count")


def _curves(system: MMGSystem, models: dict, ages: dict, T: int, seed: int):
    """Cost curves and deadlines from a short noiseless-ish signal history per DER."""
    rng = np.random.default_rng(seed)
    curves, deadlines = {}, {}
    for d in system.operational:
        m = models[d.id]
        age = ages[d.id]
        phi = m.prior_mean * (1.0 + 0.1 * rng.standard_normal())
        obs = [(float(k), float(m.mean_signal(phi, k))) for k in range(1, age + 1)]
        st = DegradationState.from_history(m, obs, max(T, 52), d.pm_cost, d.cm_cost)
        curves[d.id] = st.cost
        deadlines[d.id] = min(maintenance_deadline(st.rld, d.reliability, T), T)
    return curves, deadlines


def _model(rate=0.2, var=0.0004, threshold=10.0) -> DegradationModel:
    return DegradationModel(0.0, rate, var, 0.01, threshold)


def demo_two_mg(seed: int = 0) -> Instance:
    """2 MGs, T=2, H=4, two scenarios; each MG has a wind turbine and a conventional unit."""
    mgs = [Microgrid("MG1", 2.0, 2.0, 80.0), Microgrid("MG2", 2.0, 2.0, 60.0)]
    ders = [renewable("WT1", "MG1", "wind"), conventional("CG1", "MG1"),
            renewable("WT2", "MG2", "wind"), conventional("CG2", "MG2", marginal_cost=35.0)]
    links = [MgLink("MG1", "MG2", 1.0, 1.0), MgLink("MG2", "MG1", 1.0, 1.0)]
    system = MMGSystem(mgs, ders, [battery("B1", "MG1")], links, loss=0.02, T=2, H=4,
                       name="demo-two-mg")
    return _finish(system, 2, seed, ages={"WT1": 40, "CG1": 45, "WT2": 42, "CG2": 44})


def demo_failed(seed: int = 1) -> Instance:
    """2 MGs, T=3, H=4, three scenarios; one failed conventional unit awaits repair."""
    mgs = [Microgrid("MG1", 1.5, 1.5, 70.0), Microgrid("MG2", 1.5, 1.5, 90.0)]
    ders = [renewable("PV1", "MG1", "solar", p_max=2.0), conventional("CG1", "MG1", status=FAILED),
            conventional("CG2", "MG2", p_max=2.5)]
    links = [MgLink("MG1", "MG2", 1.2, 1.2), MgLink("MG2", "MG1", 1.2, 1.2)]
    system = MMGSystem(mgs, ders, [battery("B2", "MG2")], links, loss=0.03, T=3, H=4,
                       name="demo-failed")
    inst = _finish(system, 3, seed, ages={"PV1": 46, "CG2": 52})
    inst.deadlines["PV1"] = min(inst.deadlines["PV1"], 2)
    inst.deadlines["CG2"] = 1
    return inst


def demo_single(seed: int = 2) -> Instance:
    """1 MG, T=4, H=8, one scenario; tight min up/down makes the relaxation fractional."""
    mgs = [Microgrid("MG1", 1.0, 1.0, 50.0)]
    ders = [renewable("WT1", "MG1", "wind", p_max=1.2),
            conventional("CG1", "MG1", p_max=2.0, p_min=1.0, min_up=3, min_down=3,
                         start_cost=120.0, ramp_up=1.5, ramp_down=1.5)]
    system = MMGSystem(mgs, ders, [battery("B1", "MG1", 0.5)], [], loss=0.0, T=4, H=8,
                       name="demo-single")
    inst = _finish(system, 1, seed, ages={"WT1": 44, "CG1": 48})
    inst.deadlines["WT1"] = min(inst.deadlines["WT1"], 3)
    return inst


def _finish(system: MMGSystem, n_scen: int, seed: int, ages: dict) -> Instance:
    for d in system.ders:
        d.age = ages.get(d.id, d.age)
    models = {d.id: _model() for d in system.ders}
    spec = GeneratorSpec.from_system(system, n_scen, crit_load={m: 0.8 for m in system.mg_ids},
                                     noncrit_load={m: 1.2 for m in system.mg_ids},
                                     penalty_crit=500.0, penalty_noncrit=120.0)
    scenarios = generate_scenarios(spec, seed)
    curves, deadlines = _curves(system, models, ages, system.T, seed)
    return Instance(system.name, system, scenarios, curves, deadlines, models)


def demo_instances() -> list[Instance]:
    return [demo_two_mg(), demo_failed(), demo_single()]


# ---------------------------------------------------------------- desk-scale fleet

FLEET_MODEL = dict(kappa=0.0, prior_mean=0.18, prior_var=0.03 ** 2, noise_var=0.05 ** 2,
                   threshold=10.0)


def desk_fleet(storage_units: float = 1.0, T: int = 52, H: int = 24, crew_cost: float = 50.0):
    """Two microgrids, each with wind, solar and a conventional unit plus storage.

    Returns ``(system, degradation models by DER id)``.  Mean life under the
    shared degradation model is about 55 weeks.
    """
    mgs = [Microgrid("MG1", 3.0, 3.0, crew_cost), Microgrid("MG2", 3.0, 3.0, crew_cost)]
    ders = []
    for k, m in ((1, "MG1"), (2, "MG2")):
        ders += [renewable(f"WT{k}", m, "wind", p_max=2.0, pm_cost=40000.0, cm_cost=160000.0,
                           reliability=0.5),
                 renewable(f"PV{k}", m, "solar", p_max=2.0, pm_cost=30000.0, cm_cost=120000.0,
                           reliability=0.5),
                 conventional(f"CG{k}", m, p_max=2.5, p_min=0.5, pm_cost=50000.0, cm_cost=200000.0,
                              reliability=0.5, ramp_up=1.5, ramp_down=1.5)]
    links = [MgLink("MG1", "MG2", 1.5, 1.5), MgLink("MG2", "MG1", 1.5, 1.5)]
    system = MMGSystem(mgs, ders, [], links, loss=0.03, T=T, H=H, name="desk-fleet")
    system = with_storage(system, storage_units)
    models = {d.id: DegradationModel(**FLEET_MODEL) for d in system.ders}
    return system, models


def fleet_generator(system: MMGSystem, n_scenarios: int = 2, weeks: int | None = None) -> GeneratorSpec:
    return GeneratorSpec.from_system(system, n_scenarios, T=weeks or system.T,
                                     crit_load={m: 1.2 for m in system.mg_ids},
                                     noncrit_load={m: 1.6 for m in system.mg_ids},
                                     penalty_crit=800.0, penalty_noncrit=150.0)


__all__ = ["FLEET_MODEL", "Instance", "battery", "conventional", "demo_failed", "demo_instances",
           "demo_single", "demo_two_mg", "desk_fleet", "fleet_generator", "hand_count_system",
           "renewable", "with_storage"]

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmgopt.formulation import build_subproblem
from mmgopt.instances import demo_instances, demo_two_mg, desk_fleet, hand_count_system
from mmgopt.system import (GRID_CONNECTED, ISLANDED, LOCALLY_CONNECTED, Der, GeneratorSpec,
                           MgLink, Microgrid, MMGSystem, NON_RENEWABLE, generate_scenarios,
                           read_scenarios, read_system, scenarios_meta, scenarios_to_csv,
                           set_connectivity, system_from_dict, validate, write_scenarios,
                           write_system)


def codes(violations):
    return [v.code for v in violations]


# ---------------------------------------------------------------- validation

@pytest.mark.parametrize("inst", demo_instances(), ids=lambda i: i.name)
def test_bundled_demo_is_valid(inst):
    assert validate(inst.system, inst.scenarios) == []


def test_desk_fleet_is_valid():
    system, _ = desk_fleet(H=4, T=3)
    assert validate(system) == []


def test_probabilities_not_summing_to_one():
    inst = demo_two_mg()
    sc = inst.scenarios.copy()
    sc.probabilities = np.array([0.45, 0.45])
    assert codes(validate(inst.system, sc)) == ["scenario-prob-sum"]


def test_asymmetric_links():
    inst = demo_two_mg()
    system = inst.system.copy()
    system.links = [lk for lk in system.links if lk.a == "MG1"]
    assert "topology-asymmetric" in codes(validate(system))


@pytest.mark.parametrize("mutate, code", [
    (lambda s: setattr(s, "loss", 1.0), "loss-fraction"),
    (lambda s: setattr(s.ders[1], "p_min", 5.0), "der-bounds"),
    (lambda s: setattr(s.ders[1], "min_up", 0), "min-up-down"),
    (lambda s: setattr(s.ders[0], "reliability", 1.0), "reliability-threshold"),
    (lambda s: setattr(s.ders[0], "cm_cost", 1.0), "maintenance-cost"),
    (lambda s: setattr(s.batteries[0], "efficiency", 1.5), "battery-efficiency"),
    (lambda s: setattr(s.batteries[0], "soc_min", 9.0), "battery-soc"),
    (lambda s: setattr(s.ders[0], "microgrid", "MG9"), "unknown-microgrid"),
    (lambda s: s.links.append(MgLink("MG1", "MG1", 1, 1)), "topology-self-loop"),
    (lambda s: setattr(s.ders[0], "status", "broken"), "der-status"),
])
def test_each_invariant_has_a_code(mutate, code):
    system = demo_two_mg().system.copy()
    mutate(system)
    assert code in codes(validate(system))


def test_scenario_checks():
    inst = demo_two_mg()
    sc = inst.scenarios.copy()
    sc.penalty_crit = sc.penalty_noncrit.copy()
    sc.d_crit[0, 0, 0, 0] = -1.0
    sc.renewable.pop("WT1")
    found = set(codes(validate(inst.system, sc)))
    assert {"penalty-order", "negative-data", "scenario-missing-der"} <= found


def test_cm_duration_defaults_to_twice_pm():
    d = Der("G", "MG1", NON_RENEWABLE, pm_duration=2)
    assert d.cm_duration == 4
    assert Der("G", "MG1", NON_RENEWABLE, pm_duration=2, cm_duration=3).cm_duration == 3


# ---------------------------------------------------------------- generator

def _spec(**kw):
    base = dict(mg_ids=["MG1", "MG2"], T=3, H=24, n_scenarios=2,
                crit_load={"MG1": 1.0, "MG2": 0.5}, noncrit_load={"MG1": 2.0, "MG2": 1.0},
                renewables={"WT1": ("wind", 2.0), "PV1": ("solar", 1.5)})
    base.update(kw)
    return GeneratorSpec(**base)


def test_zero_variance_equals_means():
    spec = _spec(n_scenarios=1, load_sd=0.0, solar_sd=0.0, wind_sd=0.0, price_sd=0.0)
    sc = generate_scenarios(spec, 5)
    shape = spec.load_shape()
    assert np.array_equal(sc.d_crit[0, 0], np.tile(1.0 * shape, (3, 1)))
    assert np.array_equal(sc.d_noncrit[0, 1], np.tile(1.0 * shape, (3, 1)))
    assert np.array_equal(sc.price_buy[0, 0], np.tile(spec.price_shape(), (3, 1)))
    assert np.allclose(sc.renewable["WT1"], 2.0 * spec.wind_mean)
    assert np.array_equal(sc.renewable["PV1"][0], np.tile(1.5 * spec.daylight(), (3, 1)))
    assert sc.probabilities.tolist() == [1.0]


def _same(a, b):
    for name in ("probabilities", "d_crit", "d_noncrit", "price_buy", "price_sell",
                 "penalty_crit", "penalty_noncrit"):
        if not np.array_equal(getattr(a, name), getattr(b, name)):
            return False
    return a.renewable.keys() == b.renewable.keys() and all(
        np.array_equal(a.renewable[k], b.renewable[k]) for k in a.renewable) \
        and a.connectivity == b.connectivity


def test_same_seed_same_scenarios():
    assert _same(generate_scenarios(_spec(), 11), generate_scenarios(_spec(), 11))
    assert not _same(generate_scenarios(_spec(), 11), generate_scenarios(_spec(), 12))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_solar_is_zero_at_night(seed):
    spec = _spec()
    sc = generate_scenarios(spec, seed)
    night = spec.daylight() == 0
    assert night.any()
    assert np.all(sc.renewable["PV1"][:, :, night] == 0.0)
    assert np.all(sc.renewable["PV1"] <= 1.5) and np.all(sc.renewable["WT1"] >= 0)


def test_probabilities_uniform_and_sell_below_buy():
    sc = generate_scenarios(_spec(n_scenarios=4), 0)
    assert np.allclose(sc.probabilities, 0.25)
    assert np.all(sc.price_sell <= sc.price_buy)


# ---------------------------------------------------------------- connectivity

def _trade_bounds(handle, kinds):
    lp = handle.lp
    return [lp.hi[j] for key, j in handle.index.items() if key[0] in kinds]


def test_islanded_all_weeks_zeroes_transactions():
    inst = demo_two_mg()
    sc = set_connectivity(inst.scenarios, range(1, inst.system.T + 1), ISLANDED)
    for t in range(1, inst.system.T + 1):
        h = build_subproblem(inst.system, sc, t)
        assert all(v == 0.0 for v in _trade_bounds(h, ("gp", "gs", "ygp", "ygs", "up", "us", "yp", "ys")))


def test_grid_connected_default_has_no_fixings():
    inst = demo_two_mg()
    assert inst.scenarios.connectivity == [GRID_CONNECTED] * inst.system.T
    h = build_subproblem(inst.system, inst.scenarios, 1)
    assert all(v > 0 for v in _trade_bounds(h, ("gp", "gs", "ygp", "ygs", "up", "us", "yp", "ys")))


def test_locally_connected_only_in_week_three():
    system = hand_count_system()
    system.T = 4
    spec = GeneratorSpec.from_system(system, 1, T=4)
    sc = set_connectivity(generate_scenarios(spec, 0), [3], LOCALLY_CONNECTED)
    for t in range(1, 5):
        grid = _trade_bounds(build_subproblem(system, sc, t), ("gp", "gs", "ygp", "ygs"))
        assert all(v == 0.0 for v in grid) if t == 3 else all(v > 0 for v in grid)


def test_set_connectivity_rejects_bad_input():
    sc = demo_two_mg().scenarios
    with pytest.raises(ValueError):
        set_connectivity(sc, [9], ISLANDED)
    with pytest.raises(ValueError):
        set_connectivity(sc, [1], "offline")
    assert sc.connectivity == [GRID_CONNECTED] * sc.T  # input untouched


# ---------------------------------------------------------------- files

@pytest.mark.parametrize("inst", demo_instances(), ids=lambda i: i.name)
def test_system_file_round_trip_is_byte_identical(inst, tmp_path):
    p = tmp_path / "sys.json"
    write_system(inst.system, p)
    first = p.read_text()
    again = read_system(p)
    write_system(again, tmp_path / "sys2.json")
    assert (tmp_path / "sys2.json").read_text() == first
    assert system_from_dict(__import__("json").loads(first)).to_json() == first


def test_infinite_limits_survive_round_trip(tmp_path):
    system = MMGSystem([Microgrid("MG1", 1.0, 1.0, 10.0)],
                       [Der("G", "MG1", NON_RENEWABLE, p_max=1.0, pm_cost=1, cm_cost=2)], T=1, H=2)
    write_system(system, tmp_path / "s.json")
    back = read_system(tmp_path / "s.json")
    assert math.isinf(back.ders[0].ramp_up)


@pytest.mark.parametrize("inst", demo_instances(), ids=lambda i: i.name)
def test_scenario_file_round_trip_is_byte_identical(inst, tmp_path):
    p = tmp_path / "sc.csv"
    write_scenarios(inst.scenarios, inst.system, p)
    back = read_scenarios(p)
    assert _same(back, inst.scenarios)
    assert scenarios_to_csv(back, inst.system) == p.read_text()
    assert scenarios_meta(back) == (tmp_path / "sc.meta.json").read_text()


def test_scenario_csv_header():
    inst = demo_two_mg()
    header = scenarios_to_csv(inst.scenarios, inst.system).splitlines()[0]
    assert header == "scenario,mg,week,hour,phi_WT1,phi_WT2,d_crit,d_noncrit,price_buy,price_sell"

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmgopt.optimizer import (EQ, GE, LE, LinearProgram, dual_objective, read_lp, solve_lp,
                              solve_mip, write_lp)

from oracles import assignment, brute_force_mip, knapsack, random_lp, vertex_oracle


def test_single_constraint_dual():
    lp = LinearProgram("one")
    x = lp.add_col("x", cost=-1.0)
    lp.add_row({x: 1.0}, LE, 3.0)
    for backend in ("native", "highs"):
        sol = solve_lp(lp, backend)
        assert sol.optimal
        assert sol.x[0] == pytest.approx(3.0)
        assert sol.objective == pytest.approx(-3.0)
        assert sol.duals[0] == pytest.approx(-1.0)


def test_infeasible_pair():
    lp = LinearProgram("inf")
    x = lp.add_col("x")
    lp.add_row({x: 1.0}, LE, 1.0)
    lp.add_row({x: 1.0}, GE, 2.0)
    assert solve_lp(lp).status == "infeasible"
    assert solve_lp(lp, "highs").status == "infeasible"


def test_unbounded():
    lp = LinearProgram("unb")
    x = lp.add_col("x", cost=-1.0)
    y = lp.add_col("y")
    lp.add_row({x: 1.0, y: -1.0}, LE, 1.0)
    assert solve_lp(lp).status == "unbounded"


@pytest.mark.parametrize("seed", range(100))
def test_random_lp_against_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    lp, A, b, lo, hi, c = random_lp(rng)
    ref = vertex_oracle(A, b, lo, hi, c)
    sol = solve_lp(lp)
    if not np.isfinite(ref):
        assert sol.status == "infeasible"
        return
    assert sol.optimal
    assert sol.objective == pytest.approx(ref, abs=1e-6)
    assert abs(dual_objective(lp, sol) - sol.objective) <= 1e-6


def test_equality_rows_and_free_columns():
    lp = LinearProgram("eq")
    x = lp.add_col("x", -np.inf, np.inf, 1.0)
    y = lp.add_col("y", 0, 10, 2.0)
    lp.add_row({x: 1.0, y: 1.0}, EQ, 4.0)
    lp.add_row({x: 1.0}, GE, -2.0)
    for backend in ("native", "highs"):
        sol = solve_lp(lp, backend)
        assert sol.objective == pytest.approx(4.0)
        assert dual_objective(lp, sol) == pytest.approx(4.0)


@pytest.mark.parametrize("seed", range(20))
def test_mip_against_enumeration(seed):
    rng = np.random.default_rng(1000 + seed)
    lp = knapsack(rng, 8) if seed % 2 == 0 else assignment(rng, 3)
    ref = brute_force_mip(lp)
    sol = solve_mip(lp)
    assert sol.optimal
    assert sol.objective == pytest.approx(ref, abs=1e-6)
    assert lp.max_violation(sol.x) <= 1e-6
    assert np.all(np.diff(sol.bound_trace) >= -1e-9)
    assert solve_mip(lp, backend="highs").objective == pytest.approx(ref, abs=1e-6)


def test_integral_root_needs_one_node():
    lp = LinearProgram("root")
    x = lp.add_col("x", cost=-1.0, binary=True)
    y = lp.add_col("y", cost=-1.0, binary=True)
    lp.add_row({x: 1.0, y: 1.0}, LE, 2.0)
    sol = solve_mip(lp)
    assert sol.optimal and sol.nodes == 1
    assert sol.objective == pytest.approx(-2.0)


@pytest.mark.parametrize("seed", range(5))
def test_gap_contract(seed):
    rng = np.random.default_rng(seed)
    lp = LinearProgram("pos")
    n = 10
    w = rng.integers(1, 10, n)
    ids = [lp.add_col(f"b{i}", cost=float(rng.integers(1, 10)), binary=True) for i in range(n)]
    lp.add_row({i: float(w[i]) for i in ids}, GE, float(w.sum() // 2))
    opt = solve_mip(lp).objective
    loose = solve_mip(lp, gap=0.5)
    assert loose.objective <= 1.5 * opt + 1e-9
    assert loose.objective - loose.bound <= 0.5 * abs(loose.bound) + 1e-6


def test_deterministic_repeat():
    lp = knapsack(np.random.default_rng(7), 10)
    a, b = solve_mip(lp), solve_mip(lp)
    assert np.array_equal(a.x, b.x) and a.nodes == b.nodes and a.bound_trace == b.bound_trace


def test_node_budget_returns_incumbent_or_status():
    lp = knapsack(np.random.default_rng(3), 12)
    sol = solve_mip(lp, max_nodes=2)
    assert sol.status in ("node_limit", "optimal")
    assert sol.bound <= solve_mip(lp).objective + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=2, max_size=5),
       st.floats(0.5, 20))
def test_lp_text_round_trip(costs, cap):
    lp = LinearProgram("rt")
    ids = [lp.add_col(f"v({k})", 0.0, float(k + 1), c) for k, c in enumerate(costs)]
    lp.add_row({i: 1.0 + 0.1 * i for i in ids}, LE, cap, "cap")
    lp.add_row({ids[0]: 1.0, ids[-1]: -1.0}, EQ, 0.0, "tie")
    text = write_lp(lp)
    back = read_lp(text)
    assert write_lp(back) == text
    assert solve_lp(back).objective == pytest.approx(solve_lp(lp).objective, abs=1e-9)

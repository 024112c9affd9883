from itertools import combinations

import numpy as np
import pytest

from backdoorlab.milp import INF, lp_relaxation, make_instance
from backdoorlab.simplex import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LpWorkspace,
    SimplexIterationError,
    solve_lp,
)


def lp_of(objective, rows, rhs, senses, lower, upper):
    n = len(objective)
    inst = make_instance("lp", objective, rows, rhs, senses, lower, upper, [])
    from backdoorlab.milp import LpProblem

    return LpProblem(
        name=inst.name, num_vars=n, objective=inst.objective, rows=inst.rows,
        rhs=inst.rhs, senses=inst.senses, lower=inst.lower, upper=inst.upper,
    )


def test_box_maximum():
    sol = solve_lp(lp_of([-1.0], [], [], [], [0.0], [1.0]))
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(1.0)
    assert sol.objective == pytest.approx(-1.0)


def test_infeasible_rows():
    sol = solve_lp(lp_of([0.0], [[(0, 1.0)]], [-1.0], ["LE"], [0.0], [1.0]))
    assert sol.status == INFEASIBLE


def test_unbounded_ray():
    sol = solve_lp(lp_of([-1.0], [], [], [], [0.0], [INF]))
    assert sol.status == UNBOUNDED


def test_equality_and_ge_rows():
    sol = solve_lp(
        lp_of(
            [1.0, 1.0],
            [[(0, 1.0), (1, 1.0)], [(0, 1.0), (1, -1.0)]],
            [1.0, 0.25],
            ["GE", "EQ"],
            [0.0, 0.0],
            [1.0, 1.0],
        )
    )
    assert sol.status == OPTIMAL
    np.testing.assert_allclose(sol.x, [0.625, 0.375], atol=1e-9)


def random_box_lp(seed, n=6, m=4):
    r = np.random.default_rng(seed)
    c = r.normal(size=n).round(3)
    A = r.normal(size=(m, n)).round(3)
    x0 = r.uniform(0.2, 0.8, size=n)
    b = A @ x0 + r.uniform(0.0, 1.0, size=m)
    rows = [[(j, float(A[i, j])) for j in range(n)] for i in range(m)]
    return lp_of(c, rows, b, ["LE"] * m, [0.0] * n, [1.0] * n), A, np.asarray(b), c


def vertex_enumeration_optimum(A, b, c, n):
    """Check every intersection of n active constraints (rows or bounds)."""
    G = np.vstack([A, -np.eye(n), np.eye(n)])
    h = np.concatenate([b, np.zeros(n), np.ones(n)])
    best = np.inf
    for idx in combinations(range(len(h)), n):
        M = G[list(idx)]
        try:
            x = np.linalg.solve(M, h[list(idx)])
        except np.linalg.LinAlgError:
            continue
        if np.all(G @ x <= h + 1e-9):
            best = min(best, float(c @ x))
    return best


def test_matches_vertex_enumeration_oracle():
    for seed in range(25):
        lp, A, b, c = random_box_lp(seed)
        sol = solve_lp(lp)
        assert sol.status == OPTIMAL
        oracle = vertex_enumeration_optimum(A, b, c, 6)
        assert sol.objective == pytest.approx(oracle, abs=1e-7)


def test_weak_duality_against_random_roundings():
    rng = np.random.default_rng(42)
    for seed in range(10):
        lp, A, b, c = random_box_lp(seed)
        sol = solve_lp(lp)
        for _ in range(50):
            x = rng.random(6)
            if np.all(A @ x <= b + 1e-12):
                assert sol.objective <= c @ x + 1e-7


def test_resolve_is_deterministic():
    lp, *_ = random_box_lp(3)
    a = solve_lp(lp)
    b = solve_lp(lp)
    assert a.status == b.status == OPTIMAL
    assert a.objective == b.objective
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.at_lower, b.at_lower)
    np.testing.assert_array_equal(a.at_upper, b.at_upper)


def test_optimal_point_respects_tolerances():
    for seed in range(10):
        lp, A, b, _ = random_box_lp(seed)
        sol = solve_lp(lp)
        assert np.all(sol.x >= -1e-9) and np.all(sol.x <= 1 + 1e-9)
        assert np.all(A @ sol.x <= b + 1e-7)


def test_iteration_limit_raises_not_lies():
    lp, *_ = random_box_lp(0)
    with pytest.raises(SimplexIterationError):
        solve_lp(lp, max_iter=1)


def test_warm_start_matches_cold_solve():
    """Re-solving with tightened bounds from the parent basis must agree
    with a from-scratch solve of the same bounds."""
    inst = make_instance(
        "w", [-1.0, -2.0, 0.5],
        [[(0, 1.0), (1, 1.0)], [(1, 1.0), (2, -1.0)]],
        [1.5, 0.5], ["LE", "LE"], [0, 0, 0], [1, 1, 1], [0, 1, 2],
    )
    ws = LpWorkspace(lp_relaxation(inst))
    root = ws.solve()
    lo = np.array(inst.lower)
    up = np.array(inst.upper)
    for j in range(3):
        for v in (0.0, 1.0):
            flo, fup = lo.copy(), up.copy()
            flo[j] = fup[j] = v
            warm = ws.solve(lower=flo, upper=fup, start=(root.vstat, root.basis))
            cold = ws.solve(lower=flo, upper=fup)
            assert warm.status == cold.status
            if warm.status == OPTIMAL:
                assert warm.objective == pytest.approx(cold.objective, abs=1e-9)


def test_zero_rows_zero_cost_vacuous():
    sol = solve_lp(lp_of([0.0, 0.0], [], [], [], [0.0, 0.0], [1.0, 1.0]))
    assert sol.status == OPTIMAL
    assert sol.objective == 0.0

"""Shared fixtures: random instance builders and brute-force oracles."""

import itertools

import numpy as np
import pytest

from backdoorlab.milp import make_instance
from backdoorlab.simplex import OPTIMAL, LpWorkspace
from backdoorlab.milp import lp_relaxation


def random_binary_instance(seed, max_bin=12, max_rows=8, continuous=0):
    """Random mixed instance biased toward feasibility.

    Rows are `a.x <= b` / `a.x >= b` with b placed around a random interior
    point, so most draws admit feasible assignments.
    """
    r = np.random.default_rng(seed)
    nb = int(r.integers(3, max_bin + 1))
    n = nb + continuous
    m = int(r.integers(1, max_rows + 1))
    c = r.normal(size=n).round(2)
    rows, rhs, senses = [], [], []
    x0 = r.random(n)
    for i in range(m):
        a = (r.normal(size=n) * (r.random(n) < 0.6)).round(2)
        if not np.any(a):
            a[int(r.integers(0, n))] = 1.0
        slack = r.uniform(0.0, 1.5)
        if r.random() < 0.75:
            senses.append("LE")
            rhs.append(float(np.round(a @ x0 + slack, 2)))
        else:
            senses.append("GE")
            rhs.append(float(np.round(a @ x0 - slack, 2)))
        rows.append([(j, float(a[j])) for j in range(n) if a[j] != 0.0])
    lower = [0.0] * n
    upper = [1.0] * n
    return make_instance(
        f"rand{seed}", c, rows, rhs, senses, lower, upper, range(nb)
    )


def brute_force_solve(inst):
    """Enumerate all binary assignments; re-solve the continuous rest by LP.

    Returns the optimal objective or None when infeasible.  Independent of
    the branch-and-bound code path: feasibility is checked directly on the
    rows, and the continuous part goes through a fresh LP per assignment.
    """
    bin_idx = sorted(inst.binary_set)
    cont_idx = [j for j in range(inst.num_vars) if j not in inst.binary_set]
    A = np.zeros((inst.num_cons, inst.num_vars))
    for r_, row in enumerate(inst.rows):
        for j, a in row:
            A[r_, j] = a
    rhs = np.asarray(inst.rhs)
    c = np.asarray(inst.objective)
    best = None
    lp = lp_relaxation(inst)
    ws = LpWorkspace(lp) if cont_idx else None
    lo = np.asarray(inst.lower, dtype=float)
    up = np.asarray(inst.upper, dtype=float)
    for bits in itertools.product((0.0, 1.0), repeat=len(bin_idx)):
        if not cont_idx:
            x = np.zeros(inst.num_vars)
            x[bin_idx] = bits
            act = A @ x
            ok = True
            for r_, s in enumerate(inst.senses):
                d = act[r_] - rhs[r_]
                if (s == "LE" and d > 1e-9) or (s == "GE" and d < -1e-9) or (
                    s == "EQ" and abs(d) > 1e-9
                ):
                    ok = False
                    break
            if ok:
                v = float(c @ x)
                best = v if best is None else min(best, v)
        else:
            flo, fup = lo.copy(), up.copy()
            flo[bin_idx] = bits
            fup[bin_idx] = bits
            sol = ws.solve(lower=flo, upper=fup)
            if sol.status == OPTIMAL:
                best = sol.objective if best is None else min(best, sol.objective)
    return best


@pytest.fixture
def tiny_gisp():
    from backdoorlab.generators import gen_gisp

    return gen_gisp(nodes=12, seed=3)

"""Bounded-variable primal simplex for LP relaxations.

The solver works on the computational form ``A x + s = b`` where each row's
slack carries the sense (``LE``: s >= 0, ``GE``: s <= 0, ``EQ``: s = 0).
Phase 1 minimizes the total bound violation of the basic variables starting
from any basis (the slack basis cold, or a caller-supplied warm basis whose
bounds changed); phase 2 runs the usual bounded ratio test with bound flips.

Pivot selection is Dantzig's rule with lowest-index tie-breaks and an
automatic switch to Bland's rule after a run of degenerate steps, so repeated
solves of the same problem take the identical pivot path.  The dense kernel
is JIT-compiled with numba when available (set ``BACKDOORLAB_NO_NUMBA=1`` to
force the pure-python fallback); both paths execute the same statements.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .milp import EQ, GE, INF, LE, LpProblem

OPTIMAL = "OPTIMAL"
INFEASIBLE = "INFEASIBLE"
UNBOUNDED = "UNBOUNDED"

_ST_OPTIMAL = 0
_ST_INFEASIBLE = 1
_ST_UNBOUNDED = 2
_ST_ITER = 3
_ST_NUMERIC = 4

_AT_LOWER = 0
_AT_UPPER = 1
_BASIC = 2
_FREE = 3

_PIVOT_EPS = 1e-9
_TIE_EPS = 1e-12
_REFACTOR_EVERY = 128

# Dense workspace memory guard: (n+m) * m floats.
_MAX_DENSE_CELLS = 40_000_000


class SimplexIterationError(RuntimeError):
    """Iteration limit hit before a status could be proven."""


class SimplexNumericalError(RuntimeError):
    """The basis became numerically unusable at the requested tolerances."""


@dataclass
class LpSolution:
    """Result of one LP solve.

    ``reduced_costs``, ``at_lower`` and ``at_upper`` cover the structural
    variables only.  ``vstat``/``basis`` snapshot the final basis so a
    follow-up solve with modified bounds can warm start.
    """

    status: str
    x: np.ndarray | None
    objective: float | None
    reduced_costs: np.ndarray | None
    at_lower: np.ndarray | None
    at_upper: np.ndarray | None
    iterations: int
    vstat: np.ndarray | None = None
    basis: np.ndarray | None = None


def _kernel_impl(WT, b, lo, up, c, vstat, basis, ftol, dtol, max_iter):
    """Two-phase bounded simplex on the transposed column matrix ``WT``.

    Returns ``(status, iterations, xall, y)`` where ``xall`` holds all
    structural and slack values and ``y`` the final dual vector.
    """
    N, m = WT.shape
    xall = np.zeros(N)
    y = np.zeros(m)

    # Basis inverse from scratch.
    Binv = np.zeros((m, m))
    if m > 0:
        M = np.zeros((m, m))
        for k in range(m):
            M[:, k] = WT[basis[k]]
        Binv = np.ascontiguousarray(np.linalg.inv(M))

    # Nonbasic values and basic solution.
    z = np.zeros(N)
    for j in range(N):
        if vstat[j] == _AT_LOWER:
            z[j] = lo[j]
        elif vstat[j] == _AT_UPPER:
            z[j] = up[j]
    xB = np.dot(Binv, b - np.dot(z, WT)) if m > 0 else np.zeros(0)

    phase = 1
    iters = 0
    degen_run = 0
    bland = False
    since_refactor = 0

    while iters < max_iter:
        if since_refactor >= _REFACTOR_EVERY and m > 0:
            M = np.zeros((m, m))
            for k in range(m):
                M[:, k] = WT[basis[k]]
            Binv = np.ascontiguousarray(np.linalg.inv(M))
            for j in range(N):
                if vstat[j] == _AT_LOWER:
                    z[j] = lo[j]
                elif vstat[j] == _AT_UPPER:
                    z[j] = up[j]
                else:
                    z[j] = 0.0
            xB = np.dot(Binv, b - np.dot(z, WT))
            since_refactor = 0

        worst = 0.0
        dvec = np.zeros(m)
        for i in range(m):
            bi = basis[i]
            if xB[i] < lo[bi] - ftol:
                dvec[i] = -1.0
                gap = lo[bi] - xB[i]
                if gap > worst:
                    worst = gap
            elif xB[i] > up[bi] + ftol:
                dvec[i] = 1.0
                gap = xB[i] - up[bi]
                if gap > worst:
                    worst = gap
        if phase == 1 and worst == 0.0:
            phase = 2
        elif phase == 2 and worst > 10.0 * ftol:
            # Drift pushed a basic variable out of its bounds: repair first.
            phase = 1

        if phase == 1:
            y = np.dot(dvec, Binv)
            s = np.dot(WT, y)
            # d[j] = derivative of the infeasibility sum w.r.t. x_j = -s[j].
            enter = -1
            enter_dir = 0
            best = dtol
            for j in range(N):
                st = vstat[j]
                if st == _BASIC:
                    continue
                if up[j] - lo[j] <= 0.0 and st != _FREE:
                    continue
                g = -s[j]
                if (st == _AT_LOWER or st == _FREE) and -g > best:
                    enter = j
                    enter_dir = 1
                    best = -g
                    if bland:
                        break
                if (st == _AT_UPPER or st == _FREE) and g > best:
                    enter = j
                    enter_dir = -1
                    best = g
                    if bland:
                        break
            if enter < 0:
                return _ST_INFEASIBLE, iters, xall, y
        else:
            cB = np.zeros(m)
            for i in range(m):
                cB[i] = c[basis[i]]
            y = np.dot(cB, Binv) if m > 0 else y
            s = np.dot(WT, y) if m > 0 else np.zeros(N)
            enter = -1
            enter_dir = 0
            best = dtol
            for j in range(N):
                st = vstat[j]
                if st == _BASIC:
                    continue
                if up[j] - lo[j] <= 0.0 and st != _FREE:
                    continue
                d = c[j] - s[j]
                if (st == _AT_LOWER or st == _FREE) and -d > best:
                    enter = j
                    enter_dir = 1
                    best = -d
                    if bland:
                        break
                if (st == _AT_UPPER or st == _FREE) and d > best:
                    enter = j
                    enter_dir = -1
                    best = d
                    if bland:
                        break
            if enter < 0:
                for j in range(N):
                    if vstat[j] == _AT_LOWER:
                        xall[j] = lo[j]
                    elif vstat[j] == _AT_UPPER:
                        xall[j] = up[j]
                    else:
                        xall[j] = 0.0
                for i in range(m):
                    xall[basis[i]] = xB[i]
                return _ST_OPTIMAL, iters, xall, y

        t = float(enter_dir)
        w = np.dot(Binv, WT[enter]) if m > 0 else np.zeros(0)

        theta_flip = up[enter] - lo[enter] if vstat[enter] != _FREE else INF
        theta_piv = INF
        leave = -1
        leave_to_upper = False
        leave_pw = 0.0
        for i in range(m):
            wi = w[i]
            if wi <= _PIVOT_EPS and wi >= -_PIVOT_EPS:
                continue
            delta = -t * wi
            bi = basis[i]
            if phase == 1 and xB[i] < lo[bi] - ftol:
                if delta <= 0.0:
                    continue
                theta_i = (lo[bi] - xB[i]) / delta
                to_upper = False
            elif phase == 1 and xB[i] > up[bi] + ftol:
                if delta >= 0.0:
                    continue
                theta_i = (up[bi] - xB[i]) / delta
                to_upper = True
            elif delta > 0.0:
                if up[bi] == INF:
                    continue
                theta_i = (up[bi] - xB[i]) / delta
                to_upper = True
            else:
                if lo[bi] == -INF:
                    continue
                theta_i = (lo[bi] - xB[i]) / delta
                to_upper = False
            if theta_i < 0.0:
                theta_i = 0.0
            pw = wi if wi > 0.0 else -wi
            if theta_i < theta_piv - _TIE_EPS:
                theta_piv = theta_i
                leave = i
                leave_to_upper = to_upper
                leave_pw = pw
            elif theta_i <= theta_piv + _TIE_EPS and leave >= 0:
                # Tie: take the lowest column in Bland mode (anti-cycling),
                # the largest pivot otherwise (stability).
                better = basis[i] < basis[leave] if bland else pw > leave_pw
                if better:
                    if theta_i < theta_piv:
                        theta_piv = theta_i
                    leave = i
                    leave_to_upper = to_upper
                    leave_pw = pw

        if leave < 0 and theta_flip == INF:
            if phase == 1:
                return _ST_NUMERIC, iters, xall, y
            return _ST_UNBOUNDED, iters, xall, y

        if leave >= 0 and theta_piv <= theta_flip + _TIE_EPS:
            theta = theta_piv
            if m > 0:
                xB -= (t * theta) * w
            enter_val = t * theta
            if vstat[enter] == _AT_LOWER:
                enter_val += lo[enter]
            elif vstat[enter] == _AT_UPPER:
                enter_val += up[enter]
            out = basis[leave]
            vstat[out] = _AT_UPPER if leave_to_upper else _AT_LOWER
            piv = w[leave]
            br = Binv[leave] / piv
            Binv -= w.reshape(m, 1) * br.reshape(1, m)
            Binv[leave] = br
            xB[leave] = enter_val
            basis[leave] = enter
            vstat[enter] = _BASIC
            since_refactor += 1
        else:
            theta = theta_flip
            if m > 0:
                xB -= (t * theta) * w
            vstat[enter] = _AT_UPPER if vstat[enter] == _AT_LOWER else _AT_LOWER

        if theta <= _TIE_EPS:
            degen_run += 1
            if degen_run > 100 + 2 * m:
                bland = True
        else:
            degen_run = 0
            bland = False
        iters += 1

    return _ST_ITER, iters, xall, y


if os.environ.get("BACKDOORLAB_NO_NUMBA"):
    _kernel = _kernel_impl
else:
    try:
        from numba import njit

        _kernel = njit(cache=True, fastmath=False)(_kernel_impl)
    except ImportError:  # pragma: no cover
        _kernel = _kernel_impl


class LpWorkspace:
    """Reusable dense workspace for repeated solves of one LP skeleton.

    Branch-and-bound re-solves the same matrix thousands of times with only
    variable bounds changing, so the extended column matrix is built once.
    """

    def __init__(self, lp: LpProblem):
        n, m = lp.num_vars, lp.num_cons
        if (n + m) * max(m, 1) > _MAX_DENSE_CELLS:
            raise ValueError(
                f"problem too large for the dense simplex ({n} vars, {m} rows)"
            )
        self.n = n
        self.m = m
        N = n + m
        WT = np.zeros((N, m))
        for r, row in enumerate(lp.rows):
            for j, a in row:
                WT[j, r] = a
            WT[n + r, r] = 1.0
        self.WT = WT
        self.b = np.asarray(lp.rhs, dtype=float)
        self.c_ext = np.zeros(N)
        self.c_ext[:n] = lp.objective
        slack_lo = np.zeros(m)
        slack_up = np.zeros(m)
        for r, sense in enumerate(lp.senses):
            if sense == LE:
                slack_lo[r], slack_up[r] = 0.0, INF
            elif sense == GE:
                slack_lo[r], slack_up[r] = -INF, 0.0
            elif sense == EQ:
                slack_lo[r], slack_up[r] = 0.0, 0.0
            else:
                raise ValueError(f"unknown sense {sense!r}")
        self.slack_lo = slack_lo
        self.slack_up = slack_up
        self.base_lower = np.asarray(lp.lower, dtype=float)
        self.base_upper = np.asarray(lp.upper, dtype=float)

    def cold_start(self, lo: np.ndarray, up: np.ndarray):
        """Slack basis with structurals at their finite bound nearest zero."""
        n, m = self.n, self.m
        vstat = np.empty(n + m, dtype=np.int8)
        for j in range(n):
            if lo[j] > -INF:
                vstat[j] = _AT_LOWER
            elif up[j] < INF:
                vstat[j] = _AT_UPPER
            else:
                vstat[j] = _FREE
        vstat[n:] = _BASIC
        basis = np.arange(n, n + m, dtype=np.int64)
        return vstat, basis

    def solve(
        self,
        lower: np.ndarray | None = None,
        upper: np.ndarray | None = None,
        start: tuple[np.ndarray, np.ndarray] | None = None,
        max_iter: int | None = None,
    ) -> LpSolution:
        """Solve with optionally overridden structural bounds and warm basis."""
        n, m = self.n, self.m
        lo = np.concatenate(
            [self.base_lower if lower is None else lower, self.slack_lo]
        )
        up = np.concatenate(
            [self.base_upper if upper is None else upper, self.slack_up]
        )
        if max_iter is None:
            max_iter = 2000 + 50 * (n + 2 * m)
        if start is None:
            vstat, basis = self.cold_start(lo, up)
        else:
            vstat, basis = start[0].copy(), start[1].copy()
        try:
            status, iters, xall, y = _kernel(
                self.WT, self.b, lo, up, self.c_ext, vstat, basis, 1e-7, 1e-9, max_iter
            )
        except np.linalg.LinAlgError:
            status, iters, xall, y = _ST_NUMERIC, 0, None, None
        if status == _ST_NUMERIC and start is not None:
            # Warm basis went bad: retry cold before giving up.
            vstat, basis = self.cold_start(lo, up)
            status, iters, xall, y = _kernel(
                self.WT, self.b, lo, up, self.c_ext, vstat, basis, 1e-7, 1e-9, max_iter
            )
        if status == _ST_ITER:
            raise SimplexIterationError(
                f"simplex hit the iteration limit ({max_iter}) without a verdict"
            )
        if status == _ST_NUMERIC:
            raise SimplexNumericalError("simplex basis became singular")
        if status == _ST_INFEASIBLE:
            return LpSolution(INFEASIBLE, None, None, None, None, None, iters)
        if status == _ST_UNBOUNDED:
            return LpSolution(UNBOUNDED, None, None, None, None, None, iters)
        x = np.clip(xall[:n], lo[:n] - 1e-7, up[:n] + 1e-7)
        x = np.clip(x, lo[:n], up[:n])
        self._verify(x, lo[:n], up[:n])
        reduced = self.c_ext[:n] - self.WT[:n] @ y
        return LpSolution(
            status=OPTIMAL,
            x=x,
            objective=float(self.c_ext[:n] @ x),
            reduced_costs=reduced,
            at_lower=vstat[:n] == _AT_LOWER,
            at_upper=vstat[:n] == _AT_UPPER,
            iterations=iters,
            vstat=vstat,
            basis=basis,
        )

    def _verify(self, x: np.ndarray, lo: np.ndarray, up: np.ndarray) -> None:
        """Never report a wrong OPTIMAL: bounds within 1e-9, rows within 1e-7."""
        if np.any(x < lo - 1e-9) or np.any(x > up + 1e-9):
            raise SimplexNumericalError("optimal point violates variable bounds")
        act = self.WT[: self.n].T @ x
        resid = act - self.b
        for r in range(self.m):
            sense = LE if self.slack_up[r] == INF else (GE if self.slack_lo[r] == -INF else EQ)
            bad = (
                resid[r] > 1e-7
                if sense == LE
                else (resid[r] < -1e-7 if sense == GE else abs(resid[r]) > 1e-7)
            )
            if bad:
                raise SimplexNumericalError(f"optimal point violates row {r}")


def solve_lp(lp: LpProblem, max_iter: int | None = None) -> LpSolution:
    """Solve one LP from a cold start; see :class:`LpWorkspace` for re-solves."""
    return LpWorkspace(lp).solve(max_iter=max_iter)

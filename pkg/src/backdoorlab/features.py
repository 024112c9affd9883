"""Bipartite feature graph of a MILP plus its root-LP solution.

Variables and constraints form the two node sets; an edge joins variable j
and constraint i exactly where the coefficient matrix is nonzero.  The
feature lists below are this package's pinned contract (changing them is a
dataset-format version bump):

Variable features (15 columns):
  0  objective coefficient / max|c|
  1  is-binary flag
  2  is-continuous flag
  3  has-finite-lower flag
  4  has-finite-upper flag
  5  lower bound / max finite |bound|, clamped to [-1, 1]
  6  upper bound / max finite |bound|, clamped to [-1, 1] (+inf -> 1)
  7  root-LP value
  8  root-LP fractionality
  9  at-lower-bound flag
  10 at-upper-bound flag
  11 reduced cost / max|c|, clamped to [-1, 1]
  12 column nonzero count / m
  13 column mean |coefficient| / max|A|
  14 nonzero-objective flag

Constraint features (4 columns): rhs / max|b|, sense flags LE / GE / EQ.
Edge feature (1 column): coefficient / max|A|.

Any max-norm that would be zero is replaced by one, so degenerate inputs
stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .milp import EQ, GE, INF, LE, MilpInstance
from .simplex import OPTIMAL as LP_OPTIMAL
from .simplex import LpSolution

NUM_VAR_FEATURES = 15
NUM_CONS_FEATURES = 4
NUM_EDGE_FEATURES = 1


@dataclass(frozen=True)
class BipartiteGraph:
    """Dense node features plus a sparse edge list, variable-order aligned."""

    var_feats: np.ndarray  # (n, 15)
    cons_feats: np.ndarray  # (m, 4)
    edges: np.ndarray  # (nnz, 2) rows of (constraint index, variable index)
    edge_feats: np.ndarray  # (nnz, 1)
    binary_mask: np.ndarray  # (n,) bool

    @property
    def num_vars(self) -> int:
        return self.var_feats.shape[0]

    @property
    def num_cons(self) -> int:
        return self.cons_feats.shape[0]


def _guard(norm: float) -> float:
    return norm if norm > 0.0 else 1.0


def featurize(inst: MilpInstance, root_lp: LpSolution) -> BipartiteGraph:
    """Build the feature graph from an instance and its OPTIMAL relaxation."""
    if root_lp.status != LP_OPTIMAL:
        raise ValueError("featurize needs an OPTIMAL root-LP solution")
    n, m = inst.num_vars, inst.num_cons
    c = np.asarray(inst.objective)
    lo = np.asarray(inst.lower)
    up = np.asarray(inst.upper)
    x = np.asarray(root_lp.x)

    cons_idx: list[int] = []
    var_idx: list[int] = []
    coefs: list[float] = []
    for r, row in enumerate(inst.rows):
        for j, a in row:
            cons_idx.append(r)
            var_idx.append(j)
            coefs.append(a)
    e_cons = np.asarray(cons_idx, dtype=np.int64)
    e_vars = np.asarray(var_idx, dtype=np.int64)
    e_coef = np.asarray(coefs, dtype=float)

    c_norm = _guard(float(np.max(np.abs(c))) if n else 0.0)
    a_norm = _guard(float(np.max(np.abs(e_coef))) if e_coef.size else 0.0)
    b_norm = _guard(float(np.max(np.abs(inst.rhs))) if m else 0.0)
    finite = np.concatenate([lo[np.isfinite(lo)], up[np.isfinite(up)]])
    bound_norm = _guard(float(np.max(np.abs(finite))) if finite.size else 0.0)

    binary_mask = np.zeros(n, dtype=bool)
    binary_mask[np.fromiter(inst.binary_set, dtype=np.int64, count=len(inst.binary_set))] = True

    col_count = np.bincount(e_vars, minlength=n).astype(float)
    col_abs_sum = np.bincount(e_vars, weights=np.abs(e_coef), minlength=n)
    col_mean = np.divide(
        col_abs_sum, col_count, out=np.zeros(n), where=col_count > 0
    )

    V = np.zeros((n, NUM_VAR_FEATURES))
    V[:, 0] = c / c_norm
    V[:, 1] = binary_mask
    V[:, 2] = ~binary_mask
    V[:, 3] = np.isfinite(lo)
    V[:, 4] = np.isfinite(up)
    V[:, 5] = np.clip(np.where(np.isfinite(lo), lo, -INF) / bound_norm, -1.0, 1.0)
    V[:, 6] = np.clip(np.where(np.isfinite(up), up, INF) / bound_norm, -1.0, 1.0)
    V[:, 7] = x
    V[:, 8] = np.minimum(x - np.floor(x), np.ceil(x) - x)
    V[:, 9] = root_lp.at_lower
    V[:, 10] = root_lp.at_upper
    V[:, 11] = np.clip(root_lp.reduced_costs / c_norm, -1.0, 1.0)
    V[:, 12] = col_count / max(m, 1)
    V[:, 13] = col_mean / a_norm
    V[:, 14] = c != 0.0

    C = np.zeros((m, NUM_CONS_FEATURES))
    if m:
        C[:, 0] = np.asarray(inst.rhs) / b_norm
        senses = np.asarray(inst.senses)
        C[:, 1] = senses == LE
        C[:, 2] = senses == GE
        C[:, 3] = senses == EQ

    edges = np.stack([e_cons, e_vars], axis=1) if e_coef.size else np.zeros((0, 2), dtype=np.int64)
    return BipartiteGraph(
        var_feats=V,
        cons_feats=C,
        edges=edges,
        edge_feats=(e_coef / a_norm).reshape(-1, 1),
        binary_mask=binary_mask,
    )

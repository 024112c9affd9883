"""Mixed-binary MILP data model, validation, LP relaxation, and text file I/O.

Every other module consumes :class:`MilpInstance` values.  The canonical
objective sense is minimization; generators that model maximization problems
negate their objective at build time.  Instances are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INF = float("inf")

LE = "LE"
GE = "GE"
EQ = "EQ"
SENSES = (LE, GE, EQ)

FILE_MAGIC = "bdmilp"
FILE_VERSION = 1
FILE_EXTENSION = ".bdmilp"


class BdmilpFormatError(ValueError):
    """Raised when an instance file cannot be parsed."""


def _fmt(x: float) -> str:
    """Decimal text with 17 significant digits (exact float64 roundtrip)."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class MilpInstance:
    """One mixed-binary minimization problem.

    ``rows[r]`` is a sorted tuple of ``(column, coefficient)`` pairs forming
    the r-th constraint row; ``senses[r]`` relates the row to ``rhs[r]``.
    ``binary_set`` indexes the binary variables; all other variables are
    continuous within their bounds (``upper`` may be ``inf``).
    """

    name: str
    num_vars: int
    objective: tuple[float, ...]
    rows: tuple[tuple[tuple[int, float], ...], ...]
    rhs: tuple[float, ...]
    senses: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    binary_set: frozenset[int] = field(default_factory=frozenset)

    @property
    def num_cons(self) -> int:
        return len(self.rows)

    def objective_value(self, x) -> float:
        return float(np.dot(np.asarray(self.objective), np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class LpProblem:
    """A MILP with integrality dropped: same coefficients and bounds, no binary set."""

    name: str
    num_vars: int
    objective: tuple[float, ...]
    rows: tuple[tuple[tuple[int, float], ...], ...]
    rhs: tuple[float, ...]
    senses: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    @property
    def num_cons(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def make_instance(name, objective, rows, rhs, senses, lower, upper, binary_set) -> MilpInstance:
    """Normalize python containers into a canonical, hashable instance."""
    objective = tuple(float(c) for c in objective)
    rows = tuple(tuple(sorted((int(j), float(a)) for j, a in row)) for row in rows)
    return MilpInstance(
        name=str(name),
        num_vars=len(objective),
        objective=objective,
        rows=rows,
        rhs=tuple(float(b) for b in rhs),
        senses=tuple(str(s) for s in senses),
        lower=tuple(float(l) for l in lower),
        upper=tuple(float(u) for u in upper),
        binary_set=frozenset(int(i) for i in binary_set),
    )


def validate_instance(inst: MilpInstance) -> ValidationReport:
    """Check every structural invariant; violations name the offending row/column."""
    bad: list[str] = []
    n = inst.num_vars
    if n < 1:
        bad.append("instance has no variables")
    if len(inst.objective) != n:
        bad.append(f"objective length {len(inst.objective)} != num_vars {n}")
    if not (len(inst.rows) == len(inst.rhs) == len(inst.senses)):
        bad.append(
            f"row/rhs/sense count mismatch: {len(inst.rows)}/{len(inst.rhs)}/{len(inst.senses)}"
        )
    if len(inst.lower) != n or len(inst.upper) != n:
        bad.append("bounds length != num_vars")
    for r, row in enumerate(inst.rows):
        seen = set()
        for j, a in row:
            if not 0 <= j < n:
                bad.append(f"row {r}: column {j} out of range")
            if j in seen:
                bad.append(f"row {r}: duplicate column {j}")
            seen.add(j)
            if not np.isfinite(a):
                bad.append(f"row {r}: non-finite coefficient at column {j}")
    for r, s in enumerate(inst.senses):
        if s not in SENSES:
            bad.append(f"row {r}: unknown sense {s!r}")
    for r, b in enumerate(inst.rhs):
        if not np.isfinite(b):
            bad.append(f"row {r}: non-finite rhs")
    for j in range(min(n, len(inst.lower), len(inst.upper))):
        lo, up = inst.lower[j], inst.upper[j]
        if not np.isfinite(lo):
            bad.append(f"column {j}: lower bound must be finite")
        if lo > up:
            bad.append(f"column {j}: lower bound {lo} above upper bound {up}")
    if not inst.binary_set:
        bad.append("binary set is empty")
    for j in sorted(inst.binary_set):
        if not 0 <= j < n:
            bad.append(f"binary index {j} out of range")
        elif inst.lower[j] != 0.0 or inst.upper[j] != 1.0:
            bad.append(f"binary bound: column {j} has bounds [{inst.lower[j]}, {inst.upper[j]}]")
    return ValidationReport(ok=not bad, violations=tuple(bad))


def lp_relaxation(inst: MilpInstance) -> LpProblem:
    """Drop integrality: identical coefficients, binary variables keep bounds [0, 1].

    Raises ``ValueError`` on structural invalidity (bad column indices or
    mismatched lengths); an empty binary set is accepted so that
    all-continuous copies relax to themselves.
    """
    structural = [
        v
        for v in validate_instance(inst).violations
        if "binary" not in v and "empty" not in v
    ]
    if structural:
        raise ValueError("invalid instance: " + "; ".join(structural))
    return LpProblem(
        name=inst.name,
        num_vars=inst.num_vars,
        objective=inst.objective,
        rows=inst.rows,
        rhs=inst.rhs,
        senses=inst.senses,
        lower=inst.lower,
        upper=inst.upper,
    )


def write_instance(inst: MilpInstance, path) -> None:
    """Serialize to the line-oriented ``.bdmilp`` text format.

    Layout: magic+version line, name, counts ``n m |I|``, objective line,
    ``m`` row lines (``row <nnz> <col> <coef> ...``), senses line, rhs line,
    lower-bounds line, upper-bounds line (``inf`` token allowed), binary
    index line.  Coefficients use 17 significant digits so the roundtrip is
    bit exact.
    """
    lines = [f"{FILE_MAGIC} {FILE_VERSION}", inst.name]
    lines.append(f"{inst.num_vars} {inst.num_cons} {len(inst.binary_set)}")
    lines.append(" ".join(_fmt(c) for c in inst.objective))
    for row in inst.rows:
        parts = [f"row {len(row)}"]
        parts.extend(f"{j} {_fmt(a)}" for j, a in row)
        lines.append(" ".join(parts))
    lines.append(" ".join(inst.senses) if inst.senses else "")
    lines.append(" ".join(_fmt(b) for b in inst.rhs) if inst.rhs else "")
    lines.append(" ".join(_fmt(l) for l in inst.lower))
    lines.append(" ".join("inf" if u == INF else _fmt(u) for u in inst.upper))
    lines.append(" ".join(str(i) for i in sorted(inst.binary_set)))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_floats(text: str, what: str, lineno: int) -> list[float]:
    out = []
    for tok in text.split():
        try:
            out.append(float(tok))
        except ValueError:
            raise BdmilpFormatError(f"line {lineno}: non-numeric {what} {tok!r}") from None
    return out


def read_instance(path) -> MilpInstance:
    """Parse a ``.bdmilp`` file; errors name the offending line."""
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.read().splitlines()
    if not raw or not raw[0].startswith(FILE_MAGIC):
        raise BdmilpFormatError("missing header")
    header = raw[0].split()
    if len(header) != 2 or header[1] != str(FILE_VERSION):
        raise BdmilpFormatError(f"unsupported format version in header {raw[0]!r}")
    if len(raw) < 3:
        raise BdmilpFormatError("truncated file: missing name/size lines")
    name = raw[1]
    try:
        n, m, nbin = (int(t) for t in raw[2].split())
    except ValueError:
        raise BdmilpFormatError("line 3: malformed size line") from None
    need = 3 + 1 + m + 5
    if len(raw) < need:
        raise BdmilpFormatError(f"truncated file: expected {need} lines, found {len(raw)}")
    objective = _parse_floats(raw[3], "objective coefficient", 4)
    if len(objective) != n:
        raise BdmilpFormatError(f"line 4: expected {n} objective coefficients")
    rows = []
    for r in range(m):
        lineno = 5 + r
        parts = raw[4 + r].split()
        if not parts or parts[0] != "row":
            raise BdmilpFormatError(f"line {lineno}: expected row line")
        try:
            nnz = int(parts[1])
        except (IndexError, ValueError):
            raise BdmilpFormatError(f"line {lineno}: malformed row count") from None
        if len(parts) != 2 + 2 * nnz:
            raise BdmilpFormatError(f"line {lineno}: row token count mismatch")
        row = []
        for k in range(nnz):
            try:
                j = int(parts[2 + 2 * k])
            except ValueError:
                raise BdmilpFormatError(f"line {lineno}: bad column index") from None
            a = _parse_floats(parts[3 + 2 * k], "coefficient", lineno)[0]
            row.append((j, a))
        rows.append(tuple(row))
    base = 4 + m
    senses = tuple(raw[base].split())
    for s in senses:
        if s not in SENSES:
            raise BdmilpFormatError(f"line {base + 1}: unknown sense token {s!r}")
    if len(senses) != m:
        raise BdmilpFormatError(f"line {base + 1}: expected {m} sense tokens")
    rhs = _parse_floats(raw[base + 1], "rhs", base + 2)
    if len(rhs) != m:
        raise BdmilpFormatError(f"line {base + 2}: expected {m} rhs values")
    lower = _parse_floats(raw[base + 2], "lower bound", base + 3)
    upper = _parse_floats(raw[base + 3], "upper bound", base + 4)
    if len(lower) != n or len(upper) != n:
        raise BdmilpFormatError("bound line length mismatch")
    btoks = raw[base + 4].split()
    if len(btoks) != nbin:
        raise BdmilpFormatError(f"line {base + 5}: expected {nbin} binary indices")
    try:
        binary = frozenset(int(t) for t in btoks)
    except ValueError:
        raise BdmilpFormatError(f"line {base + 5}: bad binary index") from None
    return MilpInstance(
        name=name,
        num_vars=n,
        objective=tuple(objective),
        rows=tuple(rows),
        rhs=tuple(rhs),
        senses=senses,
        lower=tuple(lower),
        upper=tuple(upper),
        binary_set=binary,
    )

"""MIP data model, solution checking and free-format MPS input/output.

All rows are stored in ``>=`` form: ``A x >= b``.  ``<=`` rows are negated,
equality and ranged rows are split into two ``>=`` rows, and a maximization
objective is negated so the model always minimizes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .config import INF, TOL

# Assignments are plain float arrays of length n.
Assignment = np.ndarray


class LinearRow(NamedTuple):
    """Sparse ``>=`` row: ``sum(values * x[indices]) >= lhs``."""

    indices: np.ndarray
    values: np.ndarray
    lhs: float

    @classmethod
    def from_dense(cls, coefs, lhs: float, zero: float = 0.0) -> "LinearRow":
        coefs = np.asarray(coefs, dtype=float)
        idx = np.flatnonzero(np.abs(coefs) > zero)
        return cls(idx.astype(np.int64), coefs[idx].copy(), float(lhs))

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.indices] = self.values
        return out

    def activity(self, x) -> float:
        return float(np.dot(self.values, np.asarray(x)[self.indices]))


class ModelError(ValueError):
    pass


class MpsParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(eq=False)
class MipModel:
    """``min c x + offset  s.t.  A x >= b,  lb <= x <= ub,  x_i integral for i in I``.

    ``sense`` remembers the orientation of the original objective (-1 for a
    maximization input, whose ``c`` is stored negated).
    """

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    is_int: np.ndarray
    var_names: list[str] = field(default_factory=list)
    row_names: list[str] = field(default_factory=list)
    name: str = "model"
    offset: float = 0.0
    sense: int = 1

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.lb = np.asarray(self.lb, dtype=float).copy()
        self.ub = np.asarray(self.ub, dtype=float).copy()
        self.is_int = np.asarray(self.is_int, dtype=bool)
        A = sp.csr_matrix(self.A, dtype=float)
        A.eliminate_zeros()
        A.sort_indices()
        self.A = A
        n = self.c.shape[0]
        if self.A.shape != (self.b.shape[0], n):
            raise ModelError(f"matrix shape {self.A.shape} does not match m={self.b.shape[0]}, n={n}")
        for arr, what in ((self.lb, "lb"), (self.ub, "ub"), (self.is_int, "integrality")):
            if arr.shape != (n,):
                raise ModelError(f"{what} has shape {arr.shape}, expected ({n},)")
        if not self.var_names:
            self.var_names = [f"x{i + 1}" for i in range(n)]
        if not self.row_names:
            self.row_names = [f"r{j + 1}" for j in range(self.m)]
        if len(self.var_names) != n or len(self.row_names) != self.m:
            raise ModelError("name lists do not match model dimensions")
        for arr in (self.c, self.b, self.lb, self.ub):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def trivially_infeasible(self) -> bool:
        """Some variable has crossing global bounds."""
        return bool(np.any(self.lb > self.ub))

    @cached_property
    def rows(self) -> list[LinearRow]:
        A = self.A
        return [
            LinearRow(
                A.indices[A.indptr[j]:A.indptr[j + 1]].astype(np.int64),
                A.data[A.indptr[j]:A.indptr[j + 1]].copy(),
                float(self.b[j]),
            )
            for j in range(self.m)
        ]

    @cached_property
    def dense_A(self) -> np.ndarray:
        out = self.A.toarray()
        out.setflags(write=False)
        return out

    @cached_property
    def var_rows(self) -> list[np.ndarray]:
        """Row indices touching each column."""
        csc = self.A.tocsc()
        return [csc.indices[csc.indptr[i]:csc.indptr[i + 1]].astype(np.int64) for i in range(self.n)]

    def user_objective(self, value: float) -> float:
        """Convert an internal (minimization) objective value to the input's sense."""
        return self.sense * value

    def objective(self, x) -> float:
        return float(np.dot(self.c, x) + self.offset)

    def objective_is_integral(self) -> bool:
        """True when every objective value of an integer-feasible point is integral."""
        nz = np.flatnonzero(self.c)
        if not np.all(self.is_int[nz]):
            return False
        return bool(np.all(self.c[nz] == np.round(self.c[nz]))) and float(self.offset).is_integer()

    def global_bounds(self) -> "LocalBounds":
        return LocalBounds(self.lb.copy(), self.ub.copy())

    def structurally_equal(self, other: "MipModel") -> bool:
        """Exact equality of the normalized data (used by round-trip checks)."""
        return (
            self.n == other.n
            and self.m == other.m
            and np.array_equal(self.c, other.c)
            and (self.A != other.A).nnz == 0
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.lb, other.lb)
            and np.array_equal(self.ub, other.ub)
            and np.array_equal(self.is_int, other.is_int)
            and self.var_names == other.var_names
            and self.row_names == other.row_names
            and self.offset == other.offset
            and self.sense == other.sense
        )


@dataclass
class LocalBounds:
    lb: np.ndarray
    ub: np.ndarray

    def copy(self) -> "LocalBounds":
        return LocalBounds(self.lb.copy(), self.ub.copy())

    def within(self, outer: "LocalBounds") -> bool:
        return bool(np.all(self.lb >= outer.lb) and np.all(self.ub <= outer.ub))


@dataclass
class FeasibilityReport:
    feasible: bool
    objective: float
    row_violations: list[tuple[int, float]]
    bound_violations: list[tuple[int, float]]
    integrality_violations: list[int]


def check_solution(model: MipModel, point, tol: float = TOL.feasibility) -> FeasibilityReport:
    x = np.asarray(point, dtype=float)
    if x.shape != (model.n,):
        raise ModelError(f"point has shape {x.shape}, expected ({model.n},)")
    slack = model.A @ x - model.b
    rows = [(int(j), float(slack[j])) for j in np.flatnonzero(slack < -tol)]
    bounds = []
    for i in range(model.n):
        if x[i] < model.lb[i] - tol:
            bounds.append((i, float(model.lb[i] - x[i])))
        elif x[i] > model.ub[i] + tol:
            bounds.append((i, float(x[i] - model.ub[i])))
    frac = np.abs(x - np.round(x))
    ints = [int(i) for i in np.flatnonzero(model.is_int & (frac > tol))]
    return FeasibilityReport(
        feasible=not (rows or bounds or ints),
        objective=model.objective(x),
        row_violations=rows,
        bound_violations=bounds,
        integrality_violations=ints,
    )


def build_model(
    c: Sequence[float],
    rows: Sequence[tuple[Sequence[float], str, float]],
    lb: Sequence[float],
    ub: Sequence[float],
    integer: Sequence[bool] | None = None,
    maximize: bool = False,
    name: str = "model",
) -> MipModel:
    """Build a normalized model from dense rows given as ``(coefs, sense, rhs)``.

    ``sense`` is one of ``">="``, ``"<="``, ``"="``.
    """
    n = len(c)
    data, names, lhs = [], [], []
    for k, (coefs, sense, rhs) in enumerate(rows):
        coefs = np.asarray(coefs, dtype=float)
        if coefs.shape != (n,):
            raise ModelError(f"row {k} has {coefs.shape[0]} coefficients, expected {n}")
        rname = f"c{k + 1}"
        if sense in (">=", "G"):
            data.append(coefs), lhs.append(rhs), names.append(rname)
        elif sense in ("<=", "L"):
            data.append(-coefs), lhs.append(-rhs), names.append(rname)
        elif sense in ("=", "==", "E"):
            data += [coefs, -coefs]
            lhs += [rhs, -rhs]
            names += [rname, rname + "__ub"]
        else:
            raise ModelError(f"unknown row sense {sense!r}")
    A = sp.csr_matrix(np.array(data, dtype=float).reshape(len(data), n))
    cvec = np.asarray(c, dtype=float)
    return MipModel(
        c=-cvec if maximize else cvec,
        A=A,
        b=np.array(lhs, dtype=float),
        lb=np.asarray(lb, dtype=float),
        ub=np.asarray(ub, dtype=float),
        is_int=np.zeros(n, bool) if integer is None else np.asarray(integer, bool),
        row_names=names,
        name=name,
        sense=-1 if maximize else 1,
    )


# --------------------------------------------------------------------------
# MPS

_SECTIONS = ["NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA"]


def parse_mps(text: str) -> MipModel:
    """Parse free-format MPS text into a normalized model."""
    section = None
    order = -1
    name = "model"
    sense = 1
    obj_row = None
    row_type: dict[str, str] = {}
    row_order: list[str] = []
    col_index: dict[str, int] = {}
    col_names: list[str] = []
    col_int: list[bool] = []
    entries: dict[tuple[int, str], float] = {}
    obj: dict[int, float] = {}
    rhs: dict[str, float] = {}
    ranges: dict[str, float] = {}
    lb: dict[int, float] = {}
    ub: dict[int, float] = {}
    explicit_lb: set[int] = set()
    in_int = False
    seen_end = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        tokens = line.split()
        if not raw[0].isspace():
            head = tokens[0].upper()
            if head not in _SECTIONS:
                raise MpsParseError(f"unknown section {tokens[0]!r}", lineno)
            new_order = _SECTIONS.index(head)
            if new_order <= order:
                raise MpsParseError(f"section {head} out of order", lineno)
            if head in ("COLUMNS",) and "ROWS" != section:
                raise MpsParseError("COLUMNS must follow ROWS", lineno)
            order, section = new_order, head
            if head == "NAME":
                name = tokens[1] if len(tokens) > 1 else name
            elif head == "OBJSENSE" and len(tokens) > 1:
                sense = _parse_sense(tokens[1], lineno)
            elif head == "ENDATA":
                seen_end = True
            continue
        if section is None or section == "ENDATA":
            raise MpsParseError("data line outside of a section", lineno)

        if section == "OBJSENSE":
            sense = _parse_sense(tokens[0], lineno)
        elif section == "ROWS":
            if len(tokens) != 2:
                raise MpsParseError("ROWS entries need a type and a name", lineno)
            kind, rname = tokens[0].upper(), tokens[1]
            if kind not in ("N", "G", "L", "E"):
                raise MpsParseError(f"unknown row type {kind!r}", lineno)
            if rname in row_type:
                raise MpsParseError(f"duplicate row {rname!r}", lineno)
            row_type[rname] = kind
            if kind == "N":
                if obj_row is None:
                    obj_row = rname
            else:
                row_order.append(rname)
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1].strip("'").upper() == "MARKER":
                tag = tokens[2].strip("'").upper()
                if tag == "INTORG":
                    in_int = True
                elif tag == "INTEND":
                    in_int = False
                else:
                    raise MpsParseError(f"unknown marker {tokens[2]!r}", lineno)
                continue
            if len(tokens) not in (3, 5):
                raise MpsParseError("COLUMNS entries need column and 1 or 2 (row, value) pairs", lineno)
            cname = tokens[0]
            if cname not in col_index:
                col_index[cname] = len(col_names)
                col_names.append(cname)
                col_int.append(in_int)
            j = col_index[cname]
            for rname, sval in zip(tokens[1::2], tokens[2::2]):
                val = _parse_float(sval, lineno)
                if rname not in row_type:
                    raise MpsParseError(f"unknown row {rname!r}", lineno)
                if (j, rname) in entries or (rname == obj_row and j in obj):
                    raise MpsParseError(f"duplicate entry for column {cname!r} row {rname!r}", lineno)
                if rname == obj_row:
                    obj[j] = val
                elif row_type[rname] != "N":
                    entries[(j, rname)] = val
                else:
                    entries[(j, rname)] = 0.0  # free rows are dropped; still detect duplicates
        elif section in ("RHS", "RANGES"):
            pairs = tokens[1:] if len(tokens) % 2 == 1 else tokens
            target = rhs if section == "RHS" else ranges
            for rname, sval in zip(pairs[0::2], pairs[1::2]):
                if rname not in row_type:
                    raise MpsParseError(f"unknown row {rname!r}", lineno)
                if rname in target:
                    raise MpsParseError(f"duplicate {section} entry for row {rname!r}", lineno)
                target[rname] = _parse_float(sval, lineno)
        elif section == "BOUNDS":
            kind = tokens[0].upper()
            if kind in ("FR", "MI", "PL") or (kind == "BV" and len(tokens) <= 3):
                cname = tokens[-1]
                sval = None
            elif kind in ("UP", "LO", "FX", "LI", "UI", "BV"):
                if len(tokens) not in (3, 4):
                    raise MpsParseError(f"malformed {kind} bound", lineno)
                cname, sval = tokens[-2], tokens[-1]
            else:
                raise MpsParseError(f"unknown bound type {kind!r}", lineno)
            if cname not in col_index:
                raise MpsParseError(f"unknown column {cname!r}", lineno)
            j = col_index[cname]
            val = None if sval is None else _parse_float(sval, lineno)
            if kind in ("UP", "UI"):
                ub[j] = val
                if val < 0 and j not in explicit_lb and lb.get(j, 0.0) == 0.0:
                    lb[j] = -INF
            elif kind in ("LO", "LI"):
                lb[j] = val
                explicit_lb.add(j)
            elif kind == "FX":
                lb[j] = ub[j] = val
                explicit_lb.add(j)
            elif kind == "FR":
                lb[j], ub[j] = -INF, INF
                explicit_lb.add(j)
            elif kind == "MI":
                lb[j] = -INF
                explicit_lb.add(j)
            elif kind == "PL":
                ub[j] = INF
            elif kind == "BV":
                lb[j], ub[j] = 0.0, 1.0
                explicit_lb.add(j)
                col_int[j] = True
            if kind in ("LI", "UI"):
                col_int[j] = True

    if not seen_end:
        raise MpsParseError("missing ENDATA")
    if order < _SECTIONS.index("COLUMNS"):
        raise MpsParseError("missing ROWS/COLUMNS sections")

    n = len(col_names)
    rows_by_name: dict[str, dict[int, float]] = {r: {} for r in row_order}
    for (j, rname), val in entries.items():
        if rname in rows_by_name and val != 0.0:
            rows_by_name[rname][j] = val

    data, indices, indptr, b, names = [], [], [0], [], []

    def emit(coefs: dict[int, float], scale: float, lhs: float, rname: str):
        for j in sorted(coefs):
            indices.append(j)
            data.append(scale * coefs[j])
        indptr.append(len(indices))
        b.append(lhs)
        names.append(rname)

    for rname in row_order:
        kind = row_type[rname]
        coefs = rows_by_name[rname]
        r = rhs.get(rname, 0.0)
        if rname in ranges:
            rng = ranges[rname]
            if kind == "G":
                lo, hi = r, r + abs(rng)
            elif kind == "L":
                lo, hi = r - abs(rng), r
            else:
                lo, hi = (r, r + rng) if rng >= 0 else (r + rng, r)
        elif kind == "G":
            lo, hi = r, INF
        elif kind == "L":
            lo, hi = -INF, r
        else:
            lo = hi = r
        if lo > -INF and hi < INF:
            emit(coefs, 1.0, lo, rname)
            emit(coefs, -1.0, -hi, rname + "__ub")
        elif lo > -INF:
            emit(coefs, 1.0, lo, rname)
        else:
            emit(coefs, -1.0, -hi, rname)

    c = np.zeros(n)
    for j, v in obj.items():
        c[j] = v
    offset = -rhs.get(obj_row, 0.0) if obj_row is not None else 0.0
    A = sp.csr_matrix(
        (np.array(data, dtype=float), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(b), n),
    )
    lbv = np.array([lb.get(j, 0.0) for j in range(n)], dtype=float)
    ubv = np.array([ub.get(j, INF) for j in range(n)], dtype=float)
    return MipModel(
        c=sense * c,
        A=A,
        b=np.array(b, dtype=float),
        lb=lbv,
        ub=ubv,
        is_int=np.array(col_int, dtype=bool),
        var_names=col_names,
        row_names=names,
        name=name,
        offset=sense * offset,
        sense=sense,
    )


def _parse_float(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise MpsParseError(f"bad number {token!r}", lineno) from None


def _parse_sense(token: str, lineno: int) -> int:
    t = token.upper()
    if t in ("MAX", "MAXIMIZE"):
        return -1
    if t in ("MIN", "MINIMIZE"):
        return 1
    raise MpsParseError(f"unknown objective sense {token!r}", lineno)


def write_mps(model: MipModel, obj_name: str = "obj") -> str:
    """Emit the normalized model as free-format MPS (all constraint rows are ``G``)."""
    fmt = repr
    out = [f"NAME {model.name}"]
    if model.sense == -1:
        out += ["OBJSENSE", "    MAX"]
    out.append("ROWS")
    out.append(f" N  {obj_name}")
    out += [f" G  {r}" for r in model.row_names]
    out.append("COLUMNS")
    csc = model.A.tocsc()
    csc.sort_indices()
    user_c = model.sense * model.c
    in_int = False
    marker = 0
    for j in range(model.n):
        if model.is_int[j] != in_int:
            tag = "INTORG" if model.is_int[j] else "INTEND"
            out.append(f"    MARKER{marker} 'MARKER' '{tag}'")
            marker += 1
            in_int = bool(model.is_int[j])
        cname = model.var_names[j]
        wrote = False
        if user_c[j] != 0.0:
            out.append(f"    {cname} {obj_name} {fmt(float(user_c[j]))}")
            wrote = True
        for k in range(csc.indptr[j], csc.indptr[j + 1]):
            out.append(f"    {cname} {model.row_names[csc.indices[k]]} {fmt(float(csc.data[k]))}")
            wrote = True
        if not wrote:
            # keep empty columns visible to the parser
            out.append(f"    {cname} {obj_name} 0.0")
    if in_int:
        out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
    out.append("RHS")
    if model.offset != 0.0:
        out.append(f"    RHS {obj_name} {fmt(float(-model.sense * model.offset))}")
    for r, val in zip(model.row_names, model.b):
        if val != 0.0:
            out.append(f"    RHS {r} {fmt(float(val))}")
    out.append("BOUNDS")
    for j in range(model.n):
        lo, hi, cname = float(model.lb[j]), float(model.ub[j]), model.var_names[j]
        if lo == -INF and hi == INF:
            out.append(f" FR BND {cname}")
            continue
        if lo == hi:
            out.append(f" FX BND {cname} {fmt(lo)}")
            continue
        if lo == -INF:
            out.append(f" MI BND {cname}")
        elif lo != 0.0 or hi < 0.0:
            out.append(f" LO BND {cname} {fmt(lo)}")
        if hi < INF:
            out.append(f" UP BND {cname} {fmt(hi)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def read_mps(path) -> MipModel:
    with open(path, encoding="utf-8") as fh:
        return parse_mps(fh.read())

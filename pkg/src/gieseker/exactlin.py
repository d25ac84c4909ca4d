"""Exact rational linear algebra with deterministic basis choices.

Scalars are exact rationals: ``gmpy2.mpq`` when available, otherwise
:class:`fractions.Fraction`.  Matrices are immutable and dense;
elimination skips zero entries, which keeps the banded systems used by the
chain and equivalence modules cheap.  Subspaces are stored by a basis in
reduced column-echelon form, so equal spans always carry equal data.
"""

from __future__ import annotations

import os
import random
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

try:
    from gmpy2 import mpq as Rational
except ImportError:  # pragma: no cover
    from fractions import Fraction as Rational

__all__ = [
    "Rational",
    "Matrix",
    "Subspace",
    "rref",
    "kernel_basis",
    "image_basis",
    "intersect",
    "preimage",
    "span_sum",
    "solve_feasible",
    "MatrixEquation",
    "ScalarEquation",
    "parse_rational",
    "format_rational",
    "retry_budgets",
    "kernel_of_sparse",
    "random_invertible",
    "solve_linear",
]

_RAT_RE = re.compile(r"^-?\d+(/\d+)?$")


def parse_rational(text) -> Rational:
    """Parse ``"p"`` or ``"p/q"`` (q > 0).  Integers are accepted as well."""
    if isinstance(text, bool):
        raise ValueError("boolean is not a rational")
    if isinstance(text, int):
        return Rational(text)
    if not isinstance(text, str) or not _RAT_RE.match(text):
        raise ValueError(f"malformed rational: {text!r}")
    if "/" in text and int(text.split("/")[1]) == 0:
        raise ValueError(f"zero denominator: {text!r}")
    return Rational(text)


def format_rational(x: Rational) -> str:
    x = Rational(x)
    num, den = int(x.numerator), int(x.denominator)
    return str(num) if den == 1 else f"{num}/{den}"


def retry_budgets() -> Tuple[int, int]:
    """(resampling budget, feasibility-search draws), overridable by env."""
    raw = os.environ.get("GIESEKER_RETRY_BUDGET")
    if raw:
        parts = [int(p) for p in raw.replace("/", ",").split(",") if p.strip()]
        if len(parts) == 1:
            return parts[0], parts[0]
        if len(parts) >= 2:
            return parts[0], parts[1]
    return 256, 64


# ---------------------------------------------------------------------------
# elimination core on mutable row lists


def _rref_rows(rows: List[List[Rational]], ncols: int, limit: Optional[int] = None) -> List[int]:
    """In-place reduced row echelon form.  Pivots only in columns < limit."""
    limit = ncols if limit is None else limit
    pivots: List[int] = []
    r = 0
    nrows = len(rows)
    for c in range(limit):
        if r >= nrows:
            break
        p = None
        for i in range(r, nrows):
            if rows[i][c]:
                p = i
                break
        if p is None:
            continue
        if p != r:
            rows[r], rows[p] = rows[p], rows[r]
        prow = rows[r]
        inv = 1 / prow[c]
        if inv != 1:
            prow[:] = [x * inv if x else x for x in prow]
        nz = [j for j in range(c, ncols) if prow[j]]
        for i in range(nrows):
            if i == r:
                continue
            row = rows[i]
            factor = row[c]
            if factor:
                for j in nz:
                    row[j] -= factor * prow[j]
        pivots.append(c)
        r += 1
    return pivots


def _sparse_rref(rows: List[Dict[int, Rational]], limit: int) -> List[Tuple[int, Dict[int, Rational]]]:
    """Reduced echelon form of sparse rows; returns (pivot, row) sorted by pivot.

    Columns >= limit never become pivots (used for an augmented right side).
    A returned row with no pivot below ``limit`` signals inconsistency and is
    reported with pivot ``-1``.
    """
    basis: Dict[int, Dict[int, Rational]] = {}
    bad: List[Dict[int, Rational]] = []
    for row in rows:
        row = {k: v for k, v in row.items() if v}
        # basis rows vanish on each other's pivots, so one pass suffices
        for col in [k for k in row if k in basis]:
            coef = row.get(col)
            if not coef:
                continue
            for k, v in basis[col].items():
                nv = row.get(k, 0) - coef * v
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
        cand = [k for k in row if k < limit]
        if not cand:
            if row:
                bad.append(row)
            continue
        piv = min(cand)
        inv = 1 / row[piv]
        row = {k: v * inv for k, v in row.items()}
        # eliminate new pivot from existing rows
        for other in basis.values():
            coef = other.get(piv)
            if coef:
                for k, v in row.items():
                    nv = other.get(k, 0) - coef * v
                    if nv:
                        other[k] = nv
                    else:
                        other.pop(k, None)
        basis[piv] = row
    out = [(p, basis[p]) for p in sorted(basis)]
    out.extend((-1, b) for b in bad)
    return out


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Matrix:
    """Immutable dense rational matrix (row-major)."""

    rows: int
    cols: int
    data: Tuple[Tuple[Rational, ...], ...]

    def __post_init__(self):
        if len(self.data) != self.rows or any(len(r) != self.cols for r in self.data):
            raise ValueError("matrix shape does not match its entries")

    # construction -------------------------------------------------------
    @staticmethod
    def from_rows(rows: Sequence[Sequence], cols: Optional[int] = None) -> "Matrix":
        data = tuple(tuple(Rational(x) for x in r) for r in rows)
        if cols is None:
            cols = len(data[0]) if data else 0
        return Matrix(len(data), cols, data)

    @staticmethod
    def from_columns(columns: Sequence[Sequence], nrows: int) -> "Matrix":
        cols = [tuple(Rational(x) for x in c) for c in columns]
        data = tuple(tuple(c[i] for c in cols) for i in range(nrows))
        return Matrix(nrows, len(cols), data)

    @staticmethod
    def zeros(rows: int, cols: int) -> "Matrix":
        z = Rational(0)
        return Matrix(rows, cols, tuple((z,) * cols for _ in range(rows)))

    @staticmethod
    def identity(n: int) -> "Matrix":
        one, z = Rational(1), Rational(0)
        return Matrix(n, n, tuple(tuple(one if i == j else z for j in range(n)) for i in range(n)))

    @staticmethod
    def diag(values: Sequence) -> "Matrix":
        n = len(values)
        z = Rational(0)
        return Matrix(n, n, tuple(tuple(Rational(values[i]) if i == j else z for j in range(n)) for i in range(n)))

    @staticmethod
    def block(blocks: Sequence[Sequence["Matrix"]]) -> "Matrix":
        out: List[Tuple[Rational, ...]] = []
        for brow in blocks:
            h = brow[0].rows
            for i in range(h):
                out.append(tuple(x for b in brow for x in b.data[i]))
        return Matrix.from_rows(out, sum(b.cols for b in blocks[0]))

    # access ------------------------------------------------------------
    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, idx) -> Rational:
        i, j = idx
        return self.data[i][j]

    def row(self, i: int) -> Tuple[Rational, ...]:
        return self.data[i]

    def column(self, j: int) -> Tuple[Rational, ...]:
        return tuple(r[j] for r in self.data)

    def columns(self) -> List[Tuple[Rational, ...]]:
        return [self.column(j) for j in range(self.cols)]

    def tolist(self) -> List[List[Rational]]:
        return [list(r) for r in self.data]

    def submatrix(self, rows: Iterable[int], cols: Iterable[int]) -> "Matrix":
        rows, cols = list(rows), list(cols)
        return Matrix.from_rows([[self.data[i][j] for j in cols] for i in rows], len(cols))

    def select_columns(self, cols: Iterable[int]) -> "Matrix":
        return self.submatrix(range(self.rows), cols)

    # arithmetic --------------------------------------------------------
    def __matmul__(self, other):
        if isinstance(other, Matrix):
            if self.cols != other.rows:
                raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
            ocols = other.columns()
            return Matrix(
                self.rows,
                other.cols,
                tuple(tuple(_dot(r, c) for c in ocols) for r in self.data),
            )
        vec = tuple(other)
        if len(vec) != self.cols:
            raise ValueError("vector length mismatch")
        return tuple(_dot(r, vec) for r in self.data)

    def __add__(self, other: "Matrix") -> "Matrix":
        self._same_shape(other)
        return Matrix(self.rows, self.cols, tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.data, other.data)))

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._same_shape(other)
        return Matrix(self.rows, self.cols, tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.data, other.data)))

    def __neg__(self) -> "Matrix":
        return self.scale(-1)

    def scale(self, t) -> "Matrix":
        t = Rational(t)
        return Matrix(self.rows, self.cols, tuple(tuple(t * x for x in r) for r in self.data))

    def transpose(self) -> "Matrix":
        return Matrix(self.cols, self.rows, tuple(zip(*self.data)) if self.rows else tuple(() for _ in range(self.cols)))

    @property
    def T(self) -> "Matrix":
        return self.transpose()

    def hstack(self, *others: "Matrix") -> "Matrix":
        mats = (self,) + others
        return Matrix(self.rows, sum(m.cols for m in mats), tuple(tuple(x for m in mats for x in m.data[i]) for i in range(self.rows)))

    def vstack(self, *others: "Matrix") -> "Matrix":
        mats = (self,) + others
        return Matrix(sum(m.rows for m in mats), self.cols, tuple(r for m in mats for r in m.data))

    def _same_shape(self, other: "Matrix"):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")

    # predicates --------------------------------------------------------
    def is_zero(self) -> bool:
        return not any(x for r in self.data for x in r)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def rank(self) -> int:
        return rref(self)[2]

    def is_invertible(self) -> bool:
        return self.is_square() and self.rank() == self.rows

    def inverse(self) -> "Matrix":
        if not self.is_square():
            raise ValueError("inverse of a non-square matrix")
        n = self.rows
        one, z = Rational(1), Rational(0)
        rows = [list(self.data[i]) + [one if i == j else z for j in range(n)] for i in range(n)]
        piv = _rref_rows(rows, 2 * n, n)
        if len(piv) != n:
            raise ValueError("matrix is singular")
        return Matrix(n, n, tuple(tuple(r[n:]) for r in rows))

    def __repr__(self) -> str:
        body = "; ".join(" ".join(format_rational(x) for x in r) for r in self.data)
        return f"Matrix({self.rows}x{self.cols}: [{body}])"

    # serialization -----------------------------------------------------
    def to_json(self) -> List[List[str]]:
        return [[format_rational(x) for x in r] for r in self.data]

    @staticmethod
    def from_json(obj, rows: Optional[int] = None, cols: Optional[int] = None) -> "Matrix":
        if not isinstance(obj, list) or not all(isinstance(r, list) for r in obj):
            raise ValueError("matrix must be a nested JSON array")
        if rows is not None and len(obj) != rows:
            raise ValueError(f"expected {rows} rows, got {len(obj)}")
        width = len(obj[0]) if obj else (cols or 0)
        if cols is not None and width != cols:
            raise ValueError(f"expected {cols} columns, got {width}")
        if any(len(r) != width for r in obj):
            raise ValueError("ragged matrix")
        return Matrix.from_rows([[parse_rational(x) for x in r] for r in obj], width)


def _dot(a: Sequence[Rational], b: Sequence[Rational]) -> Rational:
    s = Rational(0)
    for x, y in zip(a, b):
        if x and y:
            s += x * y
    return s


def rref(m: Matrix) -> Tuple[Matrix, List[int], int]:
    """Reduced row-echelon form, pivot columns and rank."""
    rows = [list(r) for r in m.data]
    piv = _rref_rows(rows, m.cols)
    return Matrix(m.rows, m.cols, tuple(tuple(r) for r in rows)), piv, len(piv)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Subspace:
    """Column span inside k^ambient_dim, basis in reduced column-echelon form."""

    ambient_dim: int
    basis: Matrix

    def __post_init__(self):
        if self.basis.rows != self.ambient_dim:
            raise ValueError("basis rows must equal the ambient dimension")

    @staticmethod
    def span(vectors: Iterable[Sequence], ambient_dim: int) -> "Subspace":
        rows = [list(map(Rational, v)) for v in vectors]
        for r in rows:
            if len(r) != ambient_dim:
                raise ValueError("vector length does not match ambient dimension")
        piv = _rref_rows(rows, ambient_dim)
        rows = rows[: len(piv)]
        return Subspace(ambient_dim, Matrix.from_columns(rows, ambient_dim))

    @staticmethod
    def zero(ambient_dim: int) -> "Subspace":
        return Subspace(ambient_dim, Matrix.zeros(ambient_dim, 0))

    @staticmethod
    def full(ambient_dim: int) -> "Subspace":
        return Subspace(ambient_dim, Matrix.identity(ambient_dim))

    @staticmethod
    def coordinate(indices: Iterable[int], ambient_dim: int) -> "Subspace":
        """Span of the standard vectors e_i for the given 0-based indices."""
        vecs = []
        for i in sorted(set(indices)):
            v = [0] * ambient_dim
            v[i] = 1
            vecs.append(v)
        return Subspace.span(vecs, ambient_dim)

    @property
    def dim(self) -> int:
        return self.basis.cols

    def vectors(self) -> List[Tuple[Rational, ...]]:
        return self.basis.columns()

    def pivots(self) -> List[int]:
        out = []
        for v in self.vectors():
            out.append(next(i for i, x in enumerate(v) if x))
        return out

    def normalized(self) -> "Subspace":
        return Subspace.span(self.vectors(), self.ambient_dim)

    def contains(self, v: Sequence) -> bool:
        return Subspace.span(self.vectors() + [tuple(v)], self.ambient_dim).dim == self.dim

    def contains_subspace(self, other: "Subspace") -> bool:
        return span_sum(self, other).dim == self.dim

    def complement_indices(self) -> List[int]:
        """Indices of standard vectors completing the basis (non-pivot rows)."""
        piv = set(self.pivots())
        return [i for i in range(self.ambient_dim) if i not in piv]

    def map(self, m: Matrix) -> "Subspace":
        return image_basis(m @ self.basis) if self.dim else Subspace.zero(m.rows)

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim} in k^{self.ambient_dim}, basis={self.basis!r})"


def kernel_basis(m: Matrix) -> Subspace:
    red, piv, _ = rref(m)
    pivset = set(piv)
    free = [j for j in range(m.cols) if j not in pivset]
    vecs = []
    for f in free:
        v = [Rational(0)] * m.cols
        v[f] = Rational(1)
        for i, p in enumerate(piv):
            v[p] = -red.data[i][f]
        vecs.append(v)
    return Subspace.span(vecs, m.cols)


def image_basis(m: Matrix) -> Subspace:
    return Subspace.span(m.columns(), m.rows)


def span_sum(a: Subspace, b: Subspace) -> Subspace:
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("dimension mismatch")
    return Subspace.span(a.vectors() + b.vectors(), a.ambient_dim)


def intersect(a: Subspace, b: Subspace) -> Subspace:
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("dimension mismatch")
    if a.dim == 0 or b.dim == 0:
        return Subspace.zero(a.ambient_dim)
    # solve A x = B y
    stacked = a.basis.hstack(-b.basis)
    ker = kernel_basis(stacked)
    top = ker.basis.submatrix(range(a.dim), range(ker.dim))
    return Subspace.span((a.basis @ top).columns(), a.ambient_dim)


def preimage(m: Matrix, w: Subspace) -> Subspace:
    if m.rows != w.ambient_dim:
        raise ValueError("dimension mismatch")
    # v with m v in w  <=>  (m v, y) in kernel of [m | -W]
    stacked = m.hstack(-w.basis)
    ker = kernel_basis(stacked)
    top = ker.basis.submatrix(range(m.cols), range(ker.dim))
    return Subspace.span(top.columns(), m.cols)


def solve_linear(a: Matrix, b: Matrix) -> Optional[Matrix]:
    """Some X with a X = b, or None.  Free variables are set to zero."""
    rows = [list(a.data[i]) + list(b.data[i]) for i in range(a.rows)]
    piv = _rref_rows(rows, a.cols + b.cols, a.cols)
    for r in rows[len(piv):]:
        if any(r[a.cols:]):
            return None
    x = [[Rational(0)] * b.cols for _ in range(a.cols)]
    for i, p in enumerate(piv):
        x[p] = rows[i][a.cols:]
    return Matrix.from_rows(x, b.cols)


# ---------------------------------------------------------------------------
# feasibility search


@dataclass(frozen=True)
class MatrixEquation:
    """sum_k left_k @ X_k @ right_k == rhs.  ``None`` stands for identity."""

    terms: Tuple[Tuple[Optional[Matrix], str, Optional[Matrix]], ...]
    rhs: Optional[Matrix] = None  # zero when omitted


@dataclass(frozen=True)
class ScalarEquation:
    """sum coeff * X[name][i][j] == rhs."""

    coeffs: Tuple[Tuple[Tuple[str, int, int], Rational], ...]
    rhs: Rational = Rational(0)


def _layout(unknowns: Mapping[str, Tuple[int, int]]):
    offsets, off = {}, 0
    for name, (r, c) in unknowns.items():
        offsets[name] = off
        off += r * c
    return offsets, off


def _equation_rows(eq: MatrixEquation, unknowns, offsets) -> List[Dict[int, Rational]]:
    first = eq.terms[0]
    r0, c0 = unknowns[first[1]]
    out_rows = first[0].rows if first[0] is not None else r0
    out_cols = first[2].cols if first[2] is not None else c0
    rows: List[Dict[int, Rational]] = [dict() for _ in range(out_rows * out_cols)]
    for left, name, right in eq.terms:
        p, q = unknowns[name]
        base = offsets[name]
        lrows = left.data if left is not None else None
        rcols = right.columns() if right is not None else None
        for a in range(out_rows):
            if lrows is None:
                lnz = [(a, Rational(1))]
            else:
                lnz = [(i, x) for i, x in enumerate(lrows[a]) if x]
            if not lnz:
                continue
            for b in range(out_cols):
                if rcols is None:
                    rnz = [(b, Rational(1))]
                else:
                    rnz = [(j, y) for j, y in enumerate(rcols[b]) if y]
                if not rnz:
                    continue
                row = rows[a * out_cols + b]
                for i, x in lnz:
                    for j, y in rnz:
                        k = base + i * q + j
                        v = row.get(k, 0) + x * y
                        if v:
                            row[k] = v
                        else:
                            row.pop(k, None)
    rhs = eq.rhs
    if rhs is not None:
        for a in range(out_rows):
            for b in range(out_cols):
                if rhs.data[a][b]:
                    rows[a * out_cols + b][-1] = rhs.data[a][b]
    return rows


def solve_feasible(
    unknowns: Mapping[str, Tuple[int, int]],
    equations: Sequence,
    invertible: Sequence[str] = (),
    *,
    seed: int = 0,
    draws: Optional[int] = None,
) -> Optional[Dict[str, Matrix]]:
    """Find matrices satisfying linear equations with some of them invertible.

    The system is reduced to an affine parametrization.  The particular
    solution (all parameters zero) is tried first, then up to ``draws``
    seeded random parameter vectors with entries in [-3, 3].  Returns the
    assignment, or ``None`` when no invertible point was found.
    """
    if draws is None:
        draws = retry_budgets()[1]
    offsets, total = _layout(unknowns)
    rhs_col = total  # augmented column index
    rows: List[Dict[int, Rational]] = []
    for eq in equations:
        if isinstance(eq, MatrixEquation):
            for r in _equation_rows(eq, unknowns, offsets):
                if -1 in r:
                    r[rhs_col] = r.pop(-1)
                if r:
                    rows.append(r)
        elif isinstance(eq, ScalarEquation):
            r: Dict[int, Rational] = {}
            for (name, i, j), coef in eq.coeffs:
                k = offsets[name] + i * unknowns[name][1] + j
                r[k] = r.get(k, 0) + Rational(coef)
            if eq.rhs:
                r[rhs_col] = Rational(eq.rhs)
            rows.append(r)
        else:
            raise TypeError(f"unsupported equation {eq!r}")
    reduced = _sparse_rref(rows, total)
    if any(p == -1 for p, _ in reduced):
        return None
    pivots = {p: row for p, row in reduced}
    free = [k for k in range(total) if k not in pivots]

    def assemble(params: Dict[int, Rational]) -> List[Rational]:
        x = [Rational(0)] * total
        for k in free:
            x[k] = params.get(k, Rational(0))
        for p, row in pivots.items():
            v = row.get(rhs_col, Rational(0))
            for k, coef in row.items():
                if k != p and k != rhs_col and x[k]:
                    v -= coef * x[k]
            x[p] = v
        return x

    def unpack(x: List[Rational]) -> Dict[str, Matrix]:
        out = {}
        for name, (r, c) in unknowns.items():
            o = offsets[name]
            out[name] = Matrix.from_rows([x[o + i * c : o + (i + 1) * c] for i in range(r)], c)
        return out

    def ok(sol: Dict[str, Matrix]) -> bool:
        return all(sol[name].is_invertible() for name in invertible)

    sol = unpack(assemble({}))
    if ok(sol):
        return sol
    if not free:
        return None
    rng = random.Random(seed)
    for _ in range(draws):
        params = {k: Rational(rng.randint(-3, 3)) for k in free}
        sol = unpack(assemble(params))
        if ok(sol):
            return sol
    return None


def kernel_of_sparse(rows: Sequence[Mapping[int, Rational]], ncols: int) -> Subspace:
    """Kernel of the system given by sparse rows (column index -> coefficient)."""
    reduced = _sparse_rref([dict(r) for r in rows], ncols)
    pivots = {p: row for p, row in reduced}
    vecs = []
    for f in range(ncols):
        if f in pivots:
            continue
        v = [Rational(0)] * ncols
        v[f] = Rational(1)
        for p, row in pivots.items():
            c = row.get(f)
            if c:
                v[p] = -c
        vecs.append(v)
    return Subspace.span(vecs, ncols)


def random_invertible(n: int, rng: random.Random, lo: int = -3, hi: int = 3, max_tries: int = 1000) -> Matrix:
    """Uniform integer matrix with entries in [lo, hi], resampled until invertible."""
    for _ in range(max_tries):
        m = Matrix.from_rows([[rng.randint(lo, hi) for _ in range(n)] for _ in range(n)], n)
        if m.is_invertible():
            return m
    raise RuntimeError("could not sample an invertible matrix")

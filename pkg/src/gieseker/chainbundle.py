"""Strictly standard bundles on chains of projective lines.

Each component R_i carries O(1)^{d_i} + O^{n-d_i}.  It is presented by its
left and right fibers k^n; coordinates 0..d_i-1 are the F-part and the rest
the G-part.  A global section is a list of node values (v_i^L, v_i^R) whose
G-parts agree on each component and which match across the gluings
v_{i+1}^L = g_i v_i^R.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .exactlin import (
    Rational,
    Matrix,
    Subspace,
    intersect,
    kernel_of_sparse,
    preimage,
    random_invertible,
    retry_budgets,
)

__all__ = [
    "ChainBundle",
    "SectionVector",
    "LineBundleOnChain",
    "section_space",
    "evaluate",
    "v_subspaces",
    "is_admissible",
    "admissibility_report",
    "v_image_check",
    "subchain",
    "reverse",
    "concatenate",
    "total_degree",
    "line_tensor_degree",
    "random_chain",
    "random_composition",
    "f_part",
    "g_projection",
]

METHODS = ("definition", "dimension", "vanishing")


@dataclass(frozen=True)
class ChainBundle:
    n: int
    degrees: Tuple[int, ...]
    gluings: Tuple[Matrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        object.__setattr__(self, "gluings", tuple(self.gluings))
        if self.n < 1:
            raise ValueError("rank must be at least 1")
        for d in self.degrees:
            if not 1 <= d <= self.n:
                raise ValueError(f"component degree {d} outside [1, {self.n}]")
        if len(self.gluings) != max(len(self.degrees) - 1, 0):
            raise ValueError("need exactly r-1 gluing matrices")
        for g in self.gluings:
            if g.shape != (self.n, self.n) or not g.is_invertible():
                raise ValueError("gluings must be invertible n x n matrices")

    @property
    def r(self) -> int:
        return len(self.degrees)

    @staticmethod
    def empty(n: int) -> "ChainBundle":
        return ChainBundle(n, (), ())

    def to_json(self) -> dict:
        return {"v": 1, "n": self.n, "degrees": list(self.degrees), "gluings": [g.to_json() for g in self.gluings]}

    @staticmethod
    def from_json(obj) -> "ChainBundle":
        if not isinstance(obj, dict):
            raise ValueError("chain must be a JSON object")
        if obj.get("v", 1) != 1:
            raise ValueError("unsupported schema version")
        extra = set(obj) - {"v", "n", "degrees", "gluings"}
        if extra:
            raise ValueError(f"unexpected chain fields: {sorted(extra)}")
        n = obj.get("n")
        degrees = obj.get("degrees")
        gluings = obj.get("gluings")
        if not isinstance(n, int) or isinstance(n, bool):
            raise ValueError("chain field 'n' must be an integer")
        if not isinstance(degrees, list) or not all(isinstance(d, int) and not isinstance(d, bool) for d in degrees):
            raise ValueError("chain field 'degrees' must be a list of integers")
        if not isinstance(gluings, list):
            raise ValueError("chain field 'gluings' must be a list")
        return ChainBundle(n, tuple(degrees), tuple(Matrix.from_json(g, n, n) for g in gluings))


@dataclass(frozen=True)
class SectionVector:
    """Node values (v_i^L, v_i^R) of a section, one pair per component."""

    node_values: Tuple[Tuple[Tuple[Rational, ...], Tuple[Rational, ...]], ...]

    @staticmethod
    def from_coords(coords: Sequence, n: int) -> "SectionVector":
        r = len(coords) // (2 * n)
        pairs = []
        for i in range(r):
            base = 2 * n * i
            pairs.append((tuple(coords[base : base + n]), tuple(coords[base + n : base + 2 * n])))
        return SectionVector(tuple(pairs))

    def satisfies(self, cb: ChainBundle) -> bool:
        for i, (left, right) in enumerate(self.node_values):
            d = cb.degrees[i]
            if left[d:] != right[d:]:
                return False
            if i + 1 < cb.r and tuple(cb.gluings[i] @ right) != self.node_values[i + 1][0]:
                return False
        return True


@dataclass(frozen=True)
class LineBundleOnChain:
    degrees: Tuple[int, ...]

    def degree(self) -> int:
        return sum(self.degrees)

    def tensor(self, other: "LineBundleOnChain") -> "LineBundleOnChain":
        if len(self.degrees) != len(other.degrees):
            raise ValueError("line bundles live on chains of different length")
        return LineBundleOnChain(tuple(a + b for a, b in zip(self.degrees, other.degrees)))


# ---------------------------------------------------------------------------
# coordinate helpers


def f_part(n: int, d: int) -> Subspace:
    """Span of the first d standard vectors."""
    return Subspace.coordinate(range(d), n)


def g_projection(n: int, d: int) -> Matrix:
    """(n-d) x n matrix reading off the G-coordinates."""
    return Matrix.identity(n).submatrix(range(d, n), range(n))


def _left(n: int, i: int) -> int:
    return 2 * n * i


def _right(n: int, i: int) -> int:
    return 2 * n * i + n


def section_space(cb: ChainBundle, vanish_left: bool = False, vanish_right: bool = False) -> Subspace:
    """Global sections of E(-a x_0 - b x_r) as a subspace of k^{2nr}."""
    if cb.r == 0:
        raise ValueError("the length-zero chain has no node-value model")
    n = cb.n
    rows: List[Dict[int, Rational]] = []
    one = Rational(1)
    for i, d in enumerate(cb.degrees):
        for j in range(d, n):
            rows.append({_left(n, i) + j: one, _right(n, i) + j: -one})
    for i, g in enumerate(cb.gluings):
        for a in range(n):
            row = {_right(n, i) + b: g[a, b] for b in range(n) if g[a, b]}
            row[_left(n, i + 1) + a] = -one
            rows.append(row)
    if vanish_left:
        rows.extend({_left(n, 0) + j: one} for j in range(n))
    if vanish_right:
        rows.extend({_right(n, cb.r - 1) + j: one} for j in range(n))
    return kernel_of_sparse(rows, 2 * n * cb.r)


def evaluate(cb: ChainBundle, sections: Subspace, component: int, side: str) -> Subspace:
    """Image of a section subspace in the left/right fiber of a 1-based component."""
    n = cb.n
    i = component - 1
    start = _left(n, i) if side == "left" else _right(n, i)
    vecs = [v[start : start + n] for v in sections.vectors()]
    return Subspace.span(vecs, n)


def v_subspaces(cb: ChainBundle) -> List[Subspace]:
    """V_0, ..., V_r; V_i lives in the right fiber of component i."""
    if cb.r == 0:
        raise ValueError("the length-zero chain has no node-value model")
    n = cb.n
    out = [Subspace.zero(n)]
    prev = Subspace.zero(n)
    for i, d in enumerate(cb.degrees):
        proj = g_projection(n, d)
        moved = prev if i == 0 else prev.map(cb.gluings[i - 1])
        target = moved.map(proj) if moved.dim else Subspace.zero(n - d)
        prev = preimage(proj, target)
        out.append(prev)
    return out


def _definition_check(cb: ChainBundle) -> bool:
    vs = v_subspaces(cb)
    for i in range(1, cb.r):
        g = cb.gluings[i - 1]
        nxt = preimage(g, f_part(cb.n, cb.degrees[i]))
        if intersect(vs[i], nxt).dim:
            return False
    return True


def admissibility_report(cb: ChainBundle) -> Dict[str, bool]:
    return {m: is_admissible(cb, m) for m in METHODS}


def is_admissible(cb: ChainBundle, method: str = "definition") -> bool:
    """Admissibility by the V_i transversality, by a section count, or by vanishing.

    The "dimension" method compares dim H^0(E(-x_0)) with the total degree.
    Every summand of E(-x_0) has degree at least -1 on its component, so
    h^1 vanishes and the count equals the total degree on every chain; this
    method therefore never rejects anything.
    """
    if cb.r == 0:
        return True
    if method == "definition":
        return _definition_check(cb)
    if method == "dimension":
        return section_space(cb, True, False).dim == sum(cb.degrees)
    if method == "vanishing":
        return section_space(cb, True, True).dim == 0
    raise ValueError(f"unknown admissibility method {method!r}")


def v_image_check(cb: ChainBundle) -> bool:
    """Compare each V_i with the image of sections vanishing at x_0."""
    vs = v_subspaces(cb)
    for i in range(1, cb.r + 1):
        part = subchain(cb, 1, i)
        img = evaluate(part, section_space(part, True, False), i, "right")
        if img != vs[i]:
            return False
    return True


def subchain(cb: ChainBundle, start: int, stop: int) -> ChainBundle:
    """Components start..stop (1-based, inclusive)."""
    if not 1 <= start <= stop <= cb.r:
        raise ValueError(f"subchain bounds {start}..{stop} out of range for length {cb.r}")
    return ChainBundle(cb.n, cb.degrees[start - 1 : stop], cb.gluings[start - 1 : stop - 1])


def reverse(cb: ChainBundle) -> ChainBundle:
    return ChainBundle(cb.n, tuple(reversed(cb.degrees)), tuple(g.inverse() for g in reversed(cb.gluings)))


def concatenate(a: ChainBundle, b: ChainBundle, node_gluing: Matrix) -> ChainBundle:
    """a followed by b with node_gluing from a's last right fiber to b's first left fiber."""
    if a.n != b.n:
        raise ValueError("rank mismatch")
    if a.r == 0:
        return b
    if b.r == 0:
        return a
    return ChainBundle(a.n, a.degrees + b.degrees, a.gluings + (node_gluing,) + b.gluings)


def total_degree(cb: ChainBundle) -> int:
    return sum(cb.degrees)


def line_tensor_degree(l1: LineBundleOnChain, l2: LineBundleOnChain) -> int:
    return l1.tensor(l2).degree()


# ---------------------------------------------------------------------------
# sampling


def random_composition(total: int, parts: int, rng: random.Random) -> List[int]:
    """Uniform composition of total into the given number of positive parts."""
    if parts == 0:
        if total:
            raise ValueError("cannot split a positive total into zero parts")
        return []
    cuts = sorted(rng.sample(range(1, total), parts - 1))
    bounds = [0] + cuts + [total]
    return [bounds[k + 1] - bounds[k] for k in range(parts)]


def random_chain(
    n: int,
    r: int,
    seed: int,
    require_admissible: bool = True,
    budget: Optional[int] = None,
) -> ChainBundle:
    """Random chain with integer gluings in [-3, 3]; deterministic per seed."""
    if r < 0 or n < 1:
        raise ValueError("need n >= 1 and r >= 0")
    if require_admissible and r > n:
        raise ValueError("an admissible chain has length at most its rank")
    budget = retry_budgets()[0] if budget is None else budget
    rng = random.Random(seed)
    for _ in range(max(budget, 1)):
        if require_admissible:
            degrees = random_composition(rng.randint(r, n), r, rng) if r else []
        else:
            degrees = [rng.randint(1, n) for _ in range(r)]
        gluings = [random_invertible(n, rng) for _ in range(max(r - 1, 0))]
        cb = ChainBundle(n, tuple(degrees), tuple(gluings))
        if not require_admissible or is_admissible(cb, "vanishing"):
            return cb
    raise RuntimeError(f"no admissible chain found within {budget} attempts (n={n}, r={r})")

"""bf-morphisms and generalized isomorphisms over a field.

A bf-morphism between two n-dimensional spaces E' -> E is a scalar mu with
maps f: E' -> E and g: E -> E' such that g f = f g = mu.  A generalized
isomorphism strings n such morphisms on each side of an isomorphism phi:

    E_0 <- E_1 <- ... <- E_n --phi--> F_n -> ... -> F_1 -> F_0

where stage i on the E side has f: E_i -> E_{i-1} and g: E_{i-1} -> E_i.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .exactlin import (
    Rational,
    Matrix,
    MatrixEquation,
    Subspace,
    format_rational,
    image_basis,
    intersect,
    kernel_basis,
    parse_rational,
    random_invertible,
    solve_feasible,
)

__all__ = [
    "BfMorphism",
    "GeneralizedIsomorphism",
    "validate_bf",
    "validate_gi",
    "composite_maps",
    "gi_equivalent",
    "grassmannian_point",
    "random_bf",
    "conjugate_gi",
    "unit_bf",
]


@dataclass(frozen=True)
class BfMorphism:
    n: int
    mu: Rational
    f: Matrix
    g: Matrix
    bf_rank: int

    def __post_init__(self):
        object.__setattr__(self, "mu", Rational(self.mu))
        if self.f.shape != (self.n, self.n) or self.g.shape != (self.n, self.n):
            raise ValueError("bf-morphism maps must be n x n")
        if not 0 <= self.bf_rank <= self.n:
            raise ValueError("bf_rank must lie in [0, n]")

    @property
    def is_unit(self) -> bool:
        return self.mu != 0

    def normalized(self) -> "BfMorphism":
        """Rescale a unit stage to mu = 1 (g becomes f^{-1})."""
        if self.mu == 0 or self.mu == 1:
            return self
        return BfMorphism(self.n, Rational(1), self.f, self.g.scale(1 / self.mu), self.bf_rank)


def unit_bf(n: int, bf_rank: int) -> BfMorphism:
    eye = Matrix.identity(n)
    return BfMorphism(n, Rational(1), eye, eye, bf_rank)


def validate_bf(b: BfMorphism) -> List[str]:
    """Violations of the bf-morphism invariants; empty when valid."""
    out = []
    n = b.n
    mu_id = Matrix.identity(n).scale(b.mu)
    if b.g @ b.f != mu_id:
        out.append("g.f != mu.I")
    if b.f @ b.g != mu_id:
        out.append("f.g != mu.I")
    if b.mu != 0:
        if not b.f.is_invertible():
            out.append("mu != 0 but f is singular")
        return out
    if b.bf_rank == n:
        out.append("mu = 0 needs bf_rank < n (a component of positive degree)")
    if b.f.rank() != b.bf_rank:
        out.append(f"rank(f) = {b.f.rank()} but bf_rank = {b.bf_rank}")
    if image_basis(b.g) != kernel_basis(b.f):
        out.append("im(g) != ker(f)")
    if image_basis(b.f) != kernel_basis(b.g):
        out.append("im(f) != ker(g)")
    return out


def random_bf(n: int, bf_rank: int, mu, rng: random.Random) -> BfMorphism:
    """A valid bf-morphism: the diagonal normal form conjugated at random."""
    mu = Rational(mu)
    d = n - bf_rank
    n1 = Matrix.diag([mu] * d + [1] * (n - d))
    n2 = Matrix.diag([1] * d + [mu] * (n - d))
    p = random_invertible(n, rng)
    q = random_invertible(n, rng)
    qi, pi = q.inverse(), p.inverse()
    return BfMorphism(n, mu, qi @ n1 @ p, pi @ n2 @ q, bf_rank)


@dataclass(frozen=True)
class GeneralizedIsomorphism:
    n: int
    e_stages: Tuple[BfMorphism, ...]
    f_stages: Tuple[BfMorphism, ...]
    phi: Matrix

    def __post_init__(self):
        object.__setattr__(self, "e_stages", tuple(self.e_stages))
        object.__setattr__(self, "f_stages", tuple(self.f_stages))
        if len(self.e_stages) != self.n or len(self.f_stages) != self.n:
            raise ValueError("a generalized isomorphism has n stages per side")
        for b in self.e_stages + self.f_stages:
            if b.n != self.n:
                raise ValueError("stage rank mismatch")
        if self.phi.shape != (self.n, self.n) or not self.phi.is_invertible():
            raise ValueError("phi must be an invertible n x n matrix")

    @property
    def mu(self) -> Tuple[Rational, ...]:
        return tuple(b.mu for b in self.e_stages)

    @property
    def lam(self) -> Tuple[Rational, ...]:
        return tuple(b.mu for b in self.f_stages)

    def mu_zeros(self) -> List[int]:
        """1-based stage indices i with mu_{i-1} = 0."""
        return [i + 1 for i, b in enumerate(self.e_stages) if b.mu == 0]

    def lambda_zeros(self) -> List[int]:
        return [i + 1 for i, b in enumerate(self.f_stages) if b.mu == 0]

    def to_json(self) -> dict:
        return {
            "v": 1,
            "n": self.n,
            "mu": [format_rational(x) for x in self.mu],
            "lambda": [format_rational(x) for x in self.lam],
            "e_f": [b.f.to_json() for b in self.e_stages],
            "e_g": [b.g.to_json() for b in self.e_stages],
            "f_f": [b.f.to_json() for b in self.f_stages],
            "f_g": [b.g.to_json() for b in self.f_stages],
            "phi": self.phi.to_json(),
        }

    @staticmethod
    def from_json(obj) -> "GeneralizedIsomorphism":
        if not isinstance(obj, dict):
            raise ValueError("generalized isomorphism must be a JSON object")
        if obj.get("v") != 1:
            raise ValueError("missing or unsupported schema version 'v'")
        keys = {"v", "n", "mu", "lambda", "e_f", "e_g", "f_f", "f_g", "phi"}
        if set(obj) != keys:
            raise ValueError(f"generalized isomorphism fields must be exactly {sorted(keys)}")
        n = obj["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ValueError("'n' must be a positive integer")
        for k in ("mu", "lambda", "e_f", "e_g", "f_f", "f_g"):
            if not isinstance(obj[k], list) or len(obj[k]) != n:
                raise ValueError(f"'{k}' must be a list of length n")

        def stages(scalars, fs, gs):
            out = []
            for i in range(n):
                out.append(
                    BfMorphism(n, parse_rational(scalars[i]), Matrix.from_json(fs[i], n, n), Matrix.from_json(gs[i], n, n), i)
                )
            return tuple(out)

        return GeneralizedIsomorphism(
            n,
            stages(obj["mu"], obj["e_f"], obj["e_g"]),
            stages(obj["lambda"], obj["f_f"], obj["f_g"]),
            Matrix.from_json(obj["phi"], n, n),
        )


def _chain_product(mats: Sequence[Matrix], n: int) -> Matrix:
    out = Matrix.identity(n)
    for m in mats:
        out = out @ m
    return out


def composite_maps(gi: GeneralizedIsomorphism):
    """(compE: E_n -> E_0, compF: F_n -> F_0, ker compE, ker compF)."""
    comp_e = _chain_product([b.f for b in gi.e_stages], gi.n)
    comp_f = _chain_product([b.f for b in gi.f_stages], gi.n)
    return comp_e, comp_f, kernel_basis(comp_e), kernel_basis(comp_f)


def _image_conditions(stages: Sequence[BfMorphism], label: str) -> List[str]:
    n = stages[0].n if stages else 0
    out = []
    zeros = [i for i, b in enumerate(stages) if b.mu == 0]
    for p, q in zip(zeros, zeros[1:]):
        # stages strictly between p and q are units
        mid_f = _chain_product([stages[k].f for k in range(p + 1, q)], n)
        mid_g = _chain_product([stages[k].g for k in range(q - 1, p, -1)], n)
        a_p, a_q = stages[p].f, stages[q].f
        b_p, b_q = stages[p].g, stages[q].g
        if (a_p @ mid_f @ a_q).rank() != a_p.rank():
            out.append(f"{label}: im(a_{p + 1} a_{q + 1}) != im(a_{p + 1})")
        if (b_q @ mid_g @ b_p).rank() != b_q.rank():
            out.append(f"{label}: im(b_{q + 1} b_{p + 1}) != im(b_{q + 1})")
    return out


def validate_gi(gi: GeneralizedIsomorphism) -> List[str]:
    """Violations of stage, image and transversality conditions."""
    out = []
    for side, stages in (("E", gi.e_stages), ("F", gi.f_stages)):
        for i, b in enumerate(stages, start=1):
            if b.bf_rank != i - 1:
                out.append(f"{side}-stage {i}: declared rank {b.bf_rank} != {i - 1}")
            out.extend(f"{side}-stage {i}: {v}" for v in validate_bf(b))
    if out:
        return out
    out.extend(_image_conditions(gi.e_stages, "E"))
    out.extend(_image_conditions(gi.f_stages, "F"))
    _, _, ker_e, ker_f = composite_maps(gi)
    if intersect(ker_e.map(gi.phi) if ker_e.dim else Subspace.zero(gi.n), ker_f).dim:
        out.append("transversality: phi(ker compE) meets ker compF")
    return out


def conjugate_gi(gi: GeneralizedIsomorphism, cs: Sequence[Matrix], ds: Sequence[Matrix]) -> GeneralizedIsomorphism:
    """Change coordinates by c_i on E_i and d_i on F_i (i = 0..n)."""
    n = gi.n

    def move(stages, ms):
        out = []
        for i, b in enumerate(stages, start=1):
            lo, hi = ms[i - 1], ms[i]
            out.append(BfMorphism(n, b.mu, lo @ b.f @ hi.inverse(), hi @ b.g @ lo.inverse(), b.bf_rank))
        return tuple(out)

    return GeneralizedIsomorphism(n, move(gi.e_stages, cs), move(gi.f_stages, ds), ds[n] @ gi.phi @ cs[n].inverse())


def gi_equivalent(a: GeneralizedIsomorphism, b: GeneralizedIsomorphism, *, seed: int = 0, draws: Optional[int] = None) -> bool:
    """Search for stage isomorphisms fixing E_0 and F_0 that carry a to b."""
    if a.n != b.n:
        raise ValueError("rank mismatch")
    if a.mu_zeros() != b.mu_zeros() or a.lambda_zeros() != b.lambda_zeros():
        return False
    n = a.n
    minus = Matrix.identity(n).scale(-1)
    unknowns = {}
    for i in range(1, n + 1):
        unknowns[f"c{i}"] = (n, n)
        unknowns[f"d{i}"] = (n, n)
    eqs = []
    for prefix, sa, sb in (("c", a.e_stages, b.e_stages), ("d", a.f_stages, b.f_stages)):
        for i in range(1, n + 1):
            x, y = sa[i - 1].normalized(), sb[i - 1].normalized()
            hi, lo = f"{prefix}{i}", f"{prefix}{i - 1}"
            if i == 1:
                # y.f c_1 = x.f ;  y.g = c_1 x.g
                eqs.append(MatrixEquation(((y.f, hi, None),), x.f))
                eqs.append(MatrixEquation(((None, hi, x.g),), y.g))
            else:
                eqs.append(MatrixEquation(((y.f, hi, None), (minus, lo, x.f))))
                eqs.append(MatrixEquation(((y.g, lo, None), (minus, hi, x.g))))
    eqs.append(MatrixEquation(((b.phi, f"c{n}", None), (minus, f"d{n}", a.phi))))
    sol = solve_feasible(unknowns, eqs, list(unknowns), seed=seed, draws=draws)
    return sol is not None


def grassmannian_point(gi: GeneralizedIsomorphism) -> Tuple[Matrix, int]:
    """Normalized quotient map E_0 + F_0 -> Q and dim Q.

    Q is the cokernel of v -> (compE v, compF phi v); its quotient map is
    represented by the reduced row-echelon basis of the left kernel.
    """
    problems = validate_gi(gi)
    if problems:
        raise ValueError("invalid generalized isomorphism: " + "; ".join(problems))
    comp_e, comp_f, _, _ = composite_maps(gi)
    m = comp_e.vstack(comp_f @ gi.phi)
    left = kernel_basis(m.transpose())
    q = Matrix.from_rows(left.vectors(), 2 * gi.n) if left.dim else Matrix.zeros(0, 2 * gi.n)
    return q, left.dim

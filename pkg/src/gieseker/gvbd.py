"""Gieseker vector bundle data at a point.

The background bundle on the normalized curve is reduced to its two base
fibers at p_1 and p_2.  Each side carries a chain of lines hanging off the
base fiber through an ``attach`` matrix, and ``phi`` identifies the two
endpoint fibers.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .chainbundle import (
    ChainBundle,
    concatenate,
    is_admissible,
    random_composition,
    reverse,
)
from .exactlin import (
    Matrix,
    MatrixEquation,
    ScalarEquation,
    random_invertible,
    retry_budgets,
    solve_feasible,
)

__all__ = [
    "AttachedChain",
    "GiesekerDatum",
    "concatenated_chain",
    "admissible_pair",
    "extremal_degrees",
    "datum_equivalent",
    "transform_datum",
    "random_datum",
    "inf_sentinel",
]


def inf_sentinel(n: int) -> int:
    """Serialized stand-in for the infinite extremal degree of an empty chain."""
    return n + 1


@dataclass(frozen=True)
class AttachedChain:
    n: int
    chain: ChainBundle
    attach: Optional[Matrix] = None

    def __post_init__(self):
        if self.chain.n != self.n:
            raise ValueError("chain rank differs from the datum rank")
        if self.chain.r == 0:
            if self.attach is not None:
                raise ValueError("an empty chain carries no attach matrix")
        else:
            if self.attach is None:
                raise ValueError("a nonempty chain needs an attach matrix")
            if self.attach.shape != (self.n, self.n) or not self.attach.is_invertible():
                raise ValueError("attach must be an invertible n x n matrix")

    @staticmethod
    def empty(n: int) -> "AttachedChain":
        return AttachedChain(n, ChainBundle.empty(n), None)

    @property
    def r(self) -> int:
        return self.chain.r

    @property
    def degrees(self) -> Tuple[int, ...]:
        return self.chain.degrees

    def links(self) -> List[Matrix]:
        """attach followed by the gluings: the map into each component's left fiber."""
        return [] if self.attach is None else [self.attach, *self.chain.gluings]

    @staticmethod
    def from_links(n: int, degrees: Sequence[int], links: Sequence[Matrix]) -> "AttachedChain":
        if not degrees:
            return AttachedChain.empty(n)
        return AttachedChain(n, ChainBundle(n, tuple(degrees), tuple(links[1:])), links[0])

    def to_json(self) -> dict:
        return {"chain": self.chain.to_json(), "attach": None if self.attach is None else self.attach.to_json()}

    @staticmethod
    def from_json(obj, n: int) -> "AttachedChain":
        if not isinstance(obj, dict) or set(obj) != {"chain", "attach"}:
            raise ValueError("side must be an object with exactly 'chain' and 'attach'")
        chain = ChainBundle.from_json(obj["chain"])
        attach = None if obj["attach"] is None else Matrix.from_json(obj["attach"], n, n)
        return AttachedChain(n, chain, attach)


@dataclass(frozen=True)
class GiesekerDatum:
    n: int
    side1: AttachedChain
    side2: AttachedChain
    phi: Matrix

    def __post_init__(self):
        if self.side1.n != self.n or self.side2.n != self.n:
            raise ValueError("side rank differs from the datum rank")
        if self.phi.shape != (self.n, self.n) or not self.phi.is_invertible():
            raise ValueError("phi must be an invertible n x n matrix")

    def side(self, k: int) -> AttachedChain:
        if k == 1:
            return self.side1
        if k == 2:
            return self.side2
        raise ValueError("side must be 1 or 2")

    def with_side(self, k: int, side: AttachedChain, phi: Matrix) -> "GiesekerDatum":
        if k == 1:
            return GiesekerDatum(self.n, side, self.side2, phi)
        return GiesekerDatum(self.n, self.side1, side, phi)

    @staticmethod
    def empty(n: int, phi: Optional[Matrix] = None) -> "GiesekerDatum":
        e = AttachedChain.empty(n)
        return GiesekerDatum(n, e, e, Matrix.identity(n) if phi is None else phi)

    def to_json(self) -> dict:
        return {
            "v": 1,
            "n": self.n,
            "side1": self.side1.to_json(),
            "side2": self.side2.to_json(),
            "phi": self.phi.to_json(),
        }

    @staticmethod
    def from_json(obj) -> "GiesekerDatum":
        if not isinstance(obj, dict):
            raise ValueError("datum must be a JSON object")
        if obj.get("v") != 1:
            raise ValueError("missing or unsupported schema version 'v'")
        if set(obj) != {"v", "n", "side1", "side2", "phi"}:
            raise ValueError("datum fields must be exactly v, n, side1, side2, phi")
        n = obj["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ValueError("'n' must be a positive integer")
        return GiesekerDatum(
            n,
            AttachedChain.from_json(obj["side1"], n),
            AttachedChain.from_json(obj["side2"], n),
            Matrix.from_json(obj["phi"], n, n),
        )


def concatenated_chain(d: GiesekerDatum) -> ChainBundle:
    return concatenate(d.side1.chain, reverse(d.side2.chain), d.phi)


def admissible_pair(d: GiesekerDatum) -> bool:
    if d.side1.r + d.side2.r == 0:
        return True
    if sum(d.side1.degrees) + sum(d.side2.degrees) > d.n:
        return False
    return is_admissible(concatenated_chain(d), "vanishing")


def extremal_degrees(d: GiesekerDatum) -> Tuple[int, int]:
    inf = inf_sentinel(d.n)
    return tuple(s.degrees[-1] if s.r else inf for s in (d.side1, d.side2))


# ---------------------------------------------------------------------------
# automorphisms and equivalence


def _block_pattern(name: str, n: int, deg: int) -> List[ScalarEquation]:
    """Lower-left (G -> F) block of a component automorphism vanishes."""
    return [ScalarEquation((((name, i, j), 1),), 0) for i in range(deg, n) for j in range(deg)]


def _shared_blocks(left: str, right: str, n: int, deg: int) -> List[ScalarEquation]:
    """Left and right fiber actions share the A and D blocks."""
    out = []
    for i in range(n):
        for j in range(n):
            if (i < deg) == (j < deg):
                out.append(ScalarEquation((((left, i, j), 1), ((right, i, j), -1)), 0))
    return out


def transform_datum(
    d: GiesekerDatum,
    autos1: Sequence[Tuple[Matrix, Matrix]] = (),
    autos2: Sequence[Tuple[Matrix, Matrix]] = (),
    base1: Optional[Matrix] = None,
    base2: Optional[Matrix] = None,
) -> GiesekerDatum:
    """Push a datum through component automorphisms (L_j, R_j) and base isomorphisms.

    Gluings become L_{j+1} g R_j^{-1}, attaches L_1 c beta^{-1}, and phi is
    conjugated by the endpoint actions.
    """
    n = d.n
    eye = Matrix.identity(n)

    def move(side: AttachedChain, autos, base):
        if side.r == 0:
            return side, (eye if base is None else base)
        autos = list(autos) or [(eye, eye)] * side.r
        if len(autos) != side.r:
            raise ValueError("one automorphism pair per component")
        beta = eye if base is None else base
        links = [autos[0][0] @ side.attach @ beta.inverse()]
        for j, g in enumerate(side.chain.gluings):
            links.append(autos[j + 1][0] @ g @ autos[j][1].inverse())
        return AttachedChain.from_links(n, side.degrees, links), autos[-1][1]

    s1, end1 = move(d.side1, autos1, base1)
    s2, end2 = move(d.side2, autos2, base2)
    return GiesekerDatum(n, s1, s2, end2 @ d.phi @ end1.inverse())


def random_automorphism(n: int, deg: int, rng: random.Random) -> Tuple[Matrix, Matrix]:
    """Random (left, right) fiber action of an automorphism of O(1)^deg + O^(n-deg)."""
    a = random_invertible(deg, rng)
    dd = random_invertible(n - deg, rng) if n > deg else Matrix.zeros(0, 0)

    def block():
        return Matrix.from_rows([[rng.randint(-3, 3) for _ in range(n - deg)] for _ in range(deg)], n - deg)

    def assemble(b):
        lower = Matrix.zeros(n - deg, deg).hstack(dd) if n > deg else Matrix.zeros(0, n)
        return a.hstack(b).vstack(lower)

    return assemble(block()), assemble(block())


def datum_equivalent(
    a: GiesekerDatum,
    b: GiesekerDatum,
    *,
    base_isomorphisms: bool = False,
    seed: int = 0,
    draws: Optional[int] = None,
) -> bool:
    """Decide whether component automorphisms carry a onto b.

    By default the base fibers are held fixed; ``base_isomorphisms=True``
    also lets them vary by arbitrary invertible maps.
    """
    if a.n != b.n:
        return False
    if a.side1.degrees != b.side1.degrees or a.side2.degrees != b.side2.degrees:
        return False
    n = a.n
    eye = Matrix.identity(n)
    minus = eye.scale(-1)
    unknowns: Dict[str, Tuple[int, int]] = {"one": (n, n)}
    eqs: list = [MatrixEquation(((None, "one", None),), eye)]
    invertible: List[str] = []
    ends = {}
    for k in (1, 2):
        sa, sb = a.side(k), b.side(k)
        base = f"beta{k}" if base_isomorphisms else "one"
        if base_isomorphisms:
            unknowns[base] = (n, n)
            invertible.append(base)
        if sa.r == 0:
            ends[k] = base
            continue
        for j, deg in enumerate(sa.degrees):
            lname, rname = f"L{k}_{j}", f"R{k}_{j}"
            unknowns[lname] = (n, n)
            unknowns[rname] = (n, n)
            invertible.append(lname)
            eqs.extend(_block_pattern(lname, n, deg))
            eqs.extend(_block_pattern(rname, n, deg))
            eqs.extend(_shared_blocks(lname, rname, n, deg))
        # attach: b.c beta = L_1 a.c
        eqs.append(MatrixEquation(((sb.attach, base, None), (minus, f"L{k}_0", sa.attach))))
        for j in range(sa.r - 1):
            ga, gb = sa.chain.gluings[j], sb.chain.gluings[j]
            eqs.append(MatrixEquation(((gb, f"R{k}_{j}", None), (minus, f"L{k}_{j + 1}", ga))))
        ends[k] = f"R{k}_{sa.r - 1}"
    eqs.append(MatrixEquation(((b.phi, ends[1], None), (minus, ends[2], a.phi))))
    return solve_feasible(unknowns, eqs, invertible, seed=seed, draws=draws) is not None


# ---------------------------------------------------------------------------
# sampling


def random_datum(n: int, len1: int, len2: int, seed: int, budget: Optional[int] = None) -> GiesekerDatum:
    """Seeded random admissible datum with the requested chain lengths."""
    if n < 1 or len1 < 0 or len2 < 0:
        raise ValueError("need n >= 1 and nonnegative lengths")
    if len1 + len2 > n:
        raise ValueError("total chain length cannot exceed the rank")
    budget = retry_budgets()[0] if budget is None else budget
    rng = random.Random(seed)
    for _ in range(max(budget, 1)):
        parts = len1 + len2
        degrees = random_composition(rng.randint(parts, n), parts, rng) if parts else []
        sides = []
        for degs in (degrees[:len1], degrees[len1:]):
            links = [random_invertible(n, rng) for _ in degs]
            sides.append(AttachedChain.from_links(n, degs, links))
        d = GiesekerDatum(n, sides[0], sides[1], random_invertible(n, rng))
        if admissible_pair(d):
            return d
    raise RuntimeError(f"no admissible datum found within {budget} attempts")

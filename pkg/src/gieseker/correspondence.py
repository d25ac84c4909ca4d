"""Contraction, bf-extraction, insertion and the two full constructions.

Forward: contract the last component of a side whenever its degree hits the
stage threshold, recording a bf-morphism per stage.  Backward: insert a
component for every stage with vanishing scalar, in the bases produced by the
normal form, so that contracting again returns the same datum and stage.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

from .chainbundle import f_part
from .exactlin import (
    Rational,
    Matrix,
    Subspace,
    image_basis,
    intersect,
    kernel_basis,
    random_invertible,
    solve_linear,
)
from .geniso import (
    BfMorphism,
    GeneralizedIsomorphism,
    composite_maps,
    conjugate_gi,
    gi_equivalent,
    grassmannian_point,
    unit_bf,
    validate_bf,
    validate_gi,
)
from .gvbd import (
    AttachedChain,
    GiesekerDatum,
    admissible_pair,
    datum_equivalent,
    random_datum,
)

__all__ = [
    "StructuralError",
    "InvariantFault",
    "ElementaryModification",
    "elementary_modification",
    "normal_form_bf",
    "contract_step",
    "insert_step",
    "gvbd_to_gi",
    "gi_to_gvbd",
    "roundtrip_check",
    "RoundtripReport",
    "fingerprint",
    "random_gi",
    "child_seed",
]


class StructuralError(ValueError):
    """Input outside the domain of an operation (hypothesis or shape failure)."""


class InvariantFault(RuntimeError):
    """An internal post-check failed; this indicates a defect, not bad input."""


def child_seed(seed: int, index: int) -> int:
    digest = hashlib.sha256(f"{seed}/{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# small linear helpers


def _cols(vectors, n: int) -> Matrix:
    return Matrix.from_columns([tuple(v) for v in vectors], n)


def _unit(n: int, j: int) -> Tuple[Rational, ...]:
    return tuple(Rational(int(k == j)) for k in range(n))


def _orthogonal_complement(s: Subspace) -> Subspace:
    if s.dim == 0:
        return Subspace.full(s.ambient_dim)
    return kernel_basis(s.basis.transpose())


def _projector(onto: Matrix, along: Matrix) -> Matrix:
    """Projection onto span(onto) along span(along); the two must be complementary."""
    frame = onto.hstack(along)
    keep = Matrix.diag([1] * onto.cols + [0] * along.cols)
    return frame @ keep @ frame.inverse()


def _std_complement(s: Subspace) -> List[Tuple[Rational, ...]]:
    return [_unit(s.ambient_dim, j) for j in s.complement_indices()]


def _g_projector(n: int, d: int) -> Matrix:
    return Matrix.diag([0] * d + [1] * (n - d))


# ---------------------------------------------------------------------------
# elementary modification and normal forms


@dataclass(frozen=True)
class ElementaryModification:
    """Fiber data of the modification V -> W + V/W at one node.

    ``basis`` lists the new fiber's basis in V-coordinates: a basis of W
    followed by representatives of V/W.  ``inclusion`` and ``projection``
    are written in that basis; ``identification`` sends the V/W
    representatives to G-coordinates through the attach map.
    """

    n: int
    d: int
    attach: Matrix
    W: Subspace
    quotient_part: Subspace
    basis: Matrix
    inclusion: Matrix
    projection: Matrix
    identification: Matrix


def elementary_modification(n: int, attach: Matrix, d: int, complement: str = "echelon") -> ElementaryModification:
    if not 1 <= d <= n:
        raise ValueError("component degree must lie in [1, n]")
    if attach.shape != (n, n) or not attach.is_invertible():
        raise ValueError("attach must be invertible")
    w = f_part(n, d).map(attach.inverse())
    if complement == "echelon":
        rest = Subspace.span(_std_complement(w), n)
    elif complement == "orthogonal":
        rest = _orthogonal_complement(w)
    else:
        raise ValueError("complement must be 'echelon' or 'orthogonal'")
    basis = w.basis.hstack(rest.basis)
    inclusion = Matrix.zeros(d, n - d).vstack(Matrix.identity(n - d))
    projection = Matrix.identity(d).hstack(Matrix.zeros(d, n - d))
    ident = (attach @ rest.basis).submatrix(range(d, n), range(n - d))
    return ElementaryModification(n, d, attach, w, rest, basis, inclusion, projection, ident)


def normal_form_bf(b: BfMorphism) -> Tuple[Matrix, Matrix]:
    """Invertible (P, Q) with Q f P^-1 and P g Q^-1 diagonal of the block type."""
    problems = validate_bf(b)
    if problems:
        raise ValueError("invalid bf-morphism: " + "; ".join(problems))
    n = b.n
    d = n - b.bf_rank
    if b.mu != 0:
        scale = Matrix.diag([b.mu] * d + [1] * (n - d))
        return Matrix.identity(n), scale @ b.f.inverse()
    ker_f = kernel_basis(b.f)
    comp = _std_complement(ker_f)
    p_inv = _cols(ker_f.vectors() + comp, n)
    ker_g = kernel_basis(b.g)
    free = ker_g.complement_indices()
    g_sub = b.g.select_columns(free)
    qs = []
    for kappa in ker_f.vectors():
        y = solve_linear(g_sub, _cols([kappa], n))
        if y is None:
            raise InvariantFault("kernel vector of f outside the image of g")
        x = [Rational(0)] * n
        for idx, j in enumerate(free):
            x[j] = y[idx, 0]
        qs.append(tuple(x))
    q_inv = _cols(qs + [tuple(b.f @ k) for k in comp], n)
    return p_inv.inverse(), q_inv.inverse()


# ---------------------------------------------------------------------------
# contraction


def _lift_through_f(f: Matrix, d: int, ys: List[Tuple[Rational, ...]]) -> List[Tuple[Rational, ...]]:
    """For each y in im f, the unique G-part vector s with f s = y."""
    n = f.rows
    f_g = f.select_columns(range(d, n))
    out = []
    for y in ys:
        sol = solve_linear(f_g, _cols([y], n))
        if sol is None:
            raise InvariantFault("vector outside the image of the extracted f")
        out.append(tuple([Rational(0)] * d + [sol[k, 0] for k in range(n - d)]))
    return out


def _identification(f: Matrix, g: Matrix, d: int, w_part: Matrix, k_part: Matrix) -> Matrix:
    """h: new endpoint -> old endpoint, g on the W-part and f-lift on im f."""
    n = f.rows
    images = [tuple(g @ w) for w in w_part.columns()] + _lift_through_f(f, d, k_part.columns())
    return _cols(images, n) @ w_part.hstack(k_part).inverse()


def _contract_side(side: AttachedChain, threshold: int):
    n = side.n
    if not 1 <= threshold <= n:
        raise StructuralError(f"threshold {threshold} outside [1, {n}]")
    if side.r == 0 or side.degrees[-1] > threshold:
        eye = Matrix.identity(n)
        return side, unit_bf(n, n - threshold), eye
    d = side.degrees[-1]
    if d < threshold:
        raise StructuralError(f"extremal degree {d} is below the threshold {threshold}")
    links = side.links()
    pi_g = _g_projector(n, d)
    if side.r == 1:
        em = elementary_modification(n, side.attach, d, "orthogonal")
        wb, kb = em.W.basis, em.quotient_part.basis
        c = side.attach
        f = _projector(kb, wb) @ c.inverse() @ pi_g
        g = c @ _projector(wb, kb)
        bf = BfMorphism(n, Rational(0), f, g, n - d)
        h = _identification(f, g, d, wb, kb)
        return AttachedChain.empty(n), bf, h

    delta = side.degrees[-2]
    c_inv = links[-1].inverse()
    w_cols = [c_inv.column(k) for k in range(d)]
    proj = Subspace.span([w[delta:] for w in w_cols], n - delta)
    if proj.dim != d:
        raise StructuralError("node is not transversal; the side is not admissible")
    u_cols = [_unit(n, delta + j) for j in proj.complement_indices()]
    b_l = _cols([_unit(n, j) for j in range(delta)] + w_cols + u_cols, n)
    b_l_inv = b_l.inverse()
    big = delta + d
    zap = Matrix.diag([0 if delta <= j < big else 1 for j in range(n)])
    f = zap @ b_l_inv @ c_inv @ pi_g
    g = Matrix.from_rows([[int(j == delta + k) for j in range(n)] for k in range(d)] + [[0] * n for _ in range(n - d)], n)
    bf = BfMorphism(n, Rational(0), f, g, n - d)
    w_part = _cols([_unit(n, j) for j in range(delta, big)], n)
    k_part = _cols([_unit(n, j) for j in range(n) if not delta <= j < big], n)
    h = _identification(f, g, d, w_part, k_part)
    new_links = links[:-2] + [b_l_inv @ links[-2]]
    new_side = AttachedChain.from_links(n, side.degrees[:-2] + (big,), new_links)
    return new_side, bf, h


def _apply_phi(datum: GiesekerDatum, k: int, side: AttachedChain, h: Matrix) -> GiesekerDatum:
    phi = datum.phi @ h if k == 1 else h.inverse() @ datum.phi
    return datum.with_side(k, side, phi)


def contract_step(datum: GiesekerDatum, side: int, threshold: int) -> Tuple[GiesekerDatum, BfMorphism]:
    """Contract the chosen side's last component when its degree equals the threshold."""
    was_admissible = admissible_pair(datum)
    new_side, bf, h = _contract_side(datum.side(side), threshold)
    out = _apply_phi(datum, side, new_side, h)
    if new_side is not datum.side(side):
        if validate_bf(bf):
            raise InvariantFault("extracted bf-morphism is invalid")
        if was_admissible and not admissible_pair(out):
            raise InvariantFault("contraction broke admissibility")
    return out, bf


# ---------------------------------------------------------------------------
# insertion


def _normalize_neighbor(a_x: Matrix, side: AttachedChain, d: int):
    """Coordinate change on the last component moving im(a_x) to standard position.

    Returns Q (new endpoint coords -> old endpoint coords) and the side with
    the link into its last component rewritten accordingly.
    """
    n = side.n
    big = side.degrees[-1]
    delta = big - d
    k = image_basis(a_x)
    kf = intersect(k, f_part(n, big))
    if kf.dim != delta or k.dim != n - d:
        raise StructuralError("stage is incompatible with the current last component")
    piv = kf.pivots()
    std_f = [_unit(n, j) for j in range(big) if j not in set(piv)]
    kb_g = k.basis.submatrix(range(big, n), range(k.dim))
    lifts = []
    for j in range(big, n):
        y = solve_linear(kb_g, _cols([_unit(n - big, j - big)], n - big))
        if y is None:
            raise StructuralError("stage image does not cover the G-part")
        x = list(k.basis @ tuple(y.column(0)))
        for t, p in enumerate(piv):
            if x[p]:
                kappa = kf.basis.column(t)
                x = [xi - x[p] * ki for xi, ki in zip(x, kappa)]
        lifts.append(tuple(x))
    q = _cols(kf.vectors() + std_f + lifts, n)
    a_block = q.submatrix(range(big), range(big))
    a_left = Matrix.block([[a_block, Matrix.zeros(big, n - big)], [Matrix.zeros(n - big, big), Matrix.identity(n - big)]]) if big < n else a_block
    links = side.links()
    links[-1] = a_left.inverse() @ links[-1]
    return q, AttachedChain.from_links(n, side.degrees, links)


def _insert_side(side: AttachedChain, bf: BfMorphism, stage: int, iota: Matrix):
    """Insert one stage; returns (side, iota', q) with q the endpoint coordinate change."""
    n = side.n
    eye = Matrix.identity(n)
    if bf.mu != 0:
        return side, bf.g.scale(1 / bf.mu) @ iota, eye
    d = n - stage + 1
    a_x = iota.inverse() @ bf.f
    b_x = bf.g @ iota
    ker_a = kernel_basis(a_x)
    if side.r == 0:
        k = image_basis(a_x)
        w = _orthogonal_complement(k)
        comp = _std_complement(ker_a)
        p_inv = _cols(ker_a.vectors() + comp, n)
        p = p_inv.inverse()
        src = w.basis.hstack(a_x @ _cols(comp, n))
        dst = (p @ b_x @ w.basis).hstack(_cols([_unit(n, j) for j in range(d, n)], n))
        c = dst @ src.inverse()
        return AttachedChain.from_links(n, (d,), [c]), p_inv, eye
    big = side.degrees[-1]
    if big <= d:
        raise StructuralError(f"cannot insert a degree-{d} component next to one of degree {big}")
    delta = big - d
    q, side = _normalize_neighbor(a_x, side, d)
    a_x = q.inverse() @ a_x
    b_x = b_x @ q
    ker_a = kernel_basis(a_x)
    comp = _std_complement(ker_a)
    p_inv = _cols([tuple(b_x @ _unit(n, delta + k)) for k in range(d)] + comp, n)
    a_new = a_x @ p_inv
    c_inv = _cols([_unit(n, delta + k) for k in range(d)] + [a_new.column(j) for j in range(d, n)], n)
    links = side.links() + [c_inv.inverse()]
    degrees = side.degrees[:-1] + (delta, d)
    return AttachedChain.from_links(n, degrees, links), p_inv, q


def _insert(datum: GiesekerDatum, k: int, bf: BfMorphism, stage: int, iota: Matrix):
    n = datum.n
    problems = validate_bf(bf)
    if problems:
        raise StructuralError("invalid bf-morphism: " + "; ".join(problems))
    if not 1 <= stage <= n or bf.bf_rank != stage - 1:
        raise StructuralError(f"stage {stage} needs a bf-morphism of rank {stage - 1}")
    old = datum.side(k)
    new_side, iota_new, q = _insert_side(old, bf, stage, iota)
    if bf.mu != 0:
        return datum, iota_new
    phi = datum.phi @ q if k == 1 else q.inverse() @ datum.phi
    _, _, h = _contract_side(new_side, n - stage + 1)
    phi = phi @ h.inverse() if k == 1 else h @ phi
    return datum.with_side(k, new_side, phi), iota_new


def insert_step(datum: GiesekerDatum, side: int, bf: BfMorphism, stage: int) -> GiesekerDatum:
    """Undo a contraction: the endpoint is identified with E_{stage-1} by the identity."""
    out, _ = _insert(datum, side, bf, stage, Matrix.identity(datum.n))
    return out


# ---------------------------------------------------------------------------
# full constructions


def gvbd_to_gi(datum: GiesekerDatum) -> GeneralizedIsomorphism:
    if not admissible_pair(datum):
        raise StructuralError("datum is not admissible")
    n = datum.n
    original_phi = datum.phi
    stages: Dict[int, List[BfMorphism]] = {}
    cur = datum
    for k in (1, 2):
        out: List[Optional[BfMorphism]] = [None] * n
        for i in range(n, 0, -1):
            cur, bf = contract_step(cur, k, n - i + 1)
            out[i - 1] = bf
        stages[k] = out
    if cur.side1.r or cur.side2.r:
        raise InvariantFault("contraction left components behind")
    gi = GeneralizedIsomorphism(n, tuple(stages[1]), tuple(stages[2]), original_phi)
    problems = validate_gi(gi)
    if problems:
        raise InvariantFault("constructed generalized isomorphism is invalid: " + "; ".join(problems))
    return gi


def gi_to_gvbd(gi: GeneralizedIsomorphism) -> GiesekerDatum:
    problems = validate_gi(gi)
    if problems:
        raise StructuralError("invalid generalized isomorphism: " + "; ".join(problems))
    n = gi.n
    cur = GiesekerDatum.empty(n)
    iotas = {}
    for k, stages in ((2, gi.f_stages), (1, gi.e_stages)):
        iota = Matrix.identity(n)
        for i, bf in enumerate(stages, start=1):
            cur, iota = _insert(cur, k, bf, i, iota)
        iotas[k] = iota
    phi = iotas[2].inverse() @ gi.phi @ iotas[1]
    out = GiesekerDatum(n, cur.side1, cur.side2, phi)
    if not admissible_pair(out):
        raise InvariantFault("reconstructed datum is not admissible")
    return out


# ---------------------------------------------------------------------------
# round trips


@dataclass(frozen=True)
class RoundtripReport:
    ok: bool
    fingerprint: Dict[str, object]

    def to_json(self) -> dict:
        return {"ok": self.ok, "fingerprint": self.fingerprint}


def fingerprint(datum: GiesekerDatum, gi: GeneralizedIsomorphism) -> Dict[str, object]:
    comp_e, comp_f, _, _ = composite_maps(gi)
    _, dim_q = grassmannian_point(gi)
    return {
        "deg1": list(datum.side1.degrees),
        "deg2": list(datum.side2.degrees),
        "mu_zeros": gi.mu_zeros(),
        "lambda_zeros": gi.lambda_zeros(),
        "dimQ": dim_q,
        "rank_compE": comp_e.rank(),
        "rank_compF": comp_f.rank(),
    }


def roundtrip_check(x: Union[GiesekerDatum, GeneralizedIsomorphism], *, seed: int = 0) -> RoundtripReport:
    if isinstance(x, GiesekerDatum):
        gi = gvbd_to_gi(x)
        back = gi_to_gvbd(gi)
        ok = datum_equivalent(back, x, seed=seed)
        return RoundtripReport(ok, fingerprint(x, gi))
    if isinstance(x, GeneralizedIsomorphism):
        datum = gi_to_gvbd(x)
        again = gvbd_to_gi(datum)
        ok = gi_equivalent(again, x, seed=seed)
        return RoundtripReport(ok, fingerprint(datum, x))
    raise TypeError("roundtrip_check expects a datum or a generalized isomorphism")


def random_gi(n: int, seed: int, *, fix_base: bool = True) -> GeneralizedIsomorphism:
    """A valid generalized isomorphism: a random datum's image, re-coordinatized.

    Intermediate stages are conjugated by random invertibles; with
    ``fix_base=False`` the base fibers E_0 and F_0 move as well.
    """
    rng = random.Random(seed)
    total = rng.randint(0, n)
    len1 = rng.randint(0, total)
    datum = random_datum(n, len1, total - len1, rng.getrandbits(63))
    gi = gvbd_to_gi(datum)
    eye = Matrix.identity(n)
    cs = [eye if (i == 0 and fix_base) else random_invertible(n, rng) for i in range(n + 1)]
    ds = [eye if (i == 0 and fix_base) else random_invertible(n, rng) for i in range(n + 1)]
    return conjugate_gi(gi, cs, ds)

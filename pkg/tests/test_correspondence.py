import random

import pytest

from gieseker.chainbundle import ChainBundle, evaluate, section_space, subchain
from gieseker.correspondence import (
    StructuralError,
    contract_step,
    elementary_modification,
    gi_to_gvbd,
    gvbd_to_gi,
    insert_step,
    normal_form_bf,
    random_gi,
    roundtrip_check,
)
from gieseker.exactlin import Matrix, Subspace
from gieseker.geniso import BfMorphism, GeneralizedIsomorphism, composite_maps, random_bf, unit_bf, validate_bf, validate_gi
from gieseker.gvbd import AttachedChain, GiesekerDatum, datum_equivalent, random_datum

from conftest import I2, SWAP


def check_normal_form(b):
    n, d = b.n, b.n - b.bf_rank
    p, q = normal_form_bf(b)
    assert q @ b.f @ p.inverse() == Matrix.diag([b.mu] * d + [1] * (n - d))
    assert p @ b.g @ q.inverse() == Matrix.diag([1] * d + [b.mu] * (n - d))


def test_normal_form_examples():
    check_normal_form(unit_bf(2, 1))
    nil = Matrix.from_rows([[0, 0], [1, 0]])
    check_normal_form(BfMorphism(2, 0, nil, nil, 1))
    check_normal_form(BfMorphism(3, 0, Matrix.zeros(3, 3), Matrix.diag([2, 1, 1]), 0))


@pytest.mark.parametrize("seed", range(30))
def test_normal_form_random(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 5)
    check_normal_form(random_bf(n, rng.randint(0, n - 1), rng.choice([0, 1, 2]), rng))


def test_normal_form_rejects_invalid():
    with pytest.raises(ValueError):
        normal_form_bf(BfMorphism(2, 0, Matrix.identity(2), Matrix.identity(2), 1))


def test_elementary_modification():
    em = elementary_modification(2, I2, 2)
    assert em.W == Subspace.full(2) and em.quotient_part.dim == 0
    em = elementary_modification(2, I2, 1)
    assert em.W == Subspace.coordinate([0], 2) and em.quotient_part == Subspace.coordinate([1], 2)
    em = elementary_modification(2, SWAP, 1)
    assert em.W == Subspace.coordinate([1], 2)
    assert em.basis.is_invertible() and em.identification.is_invertible()


def test_contract_worked_example(worked_datum):
    d1, b1 = contract_step(worked_datum, 1, 1)
    assert d1.side1.degrees == (2,) and b1.mu == 0 and b1.bf_rank == 1
    assert validate_bf(b1) == []
    d2, b2 = contract_step(d1, 1, 2)
    assert d2.side1.r == 0 and b2.mu == 0 and b2.bf_rank == 0
    assert b2.f.is_zero() and b2.g.is_invertible()


def test_contract_noop_and_hypothesis(worked_datum):
    out, bf = contract_step(worked_datum, 2, 1)
    assert out == worked_datum and bf == unit_bf(2, 1)
    with pytest.raises(StructuralError):
        contract_step(worked_datum, 1, 2)


@pytest.mark.parametrize("seed", range(12))
def test_merged_f_part_matches_sections(seed):
    """The merged component's F-part is where sections vanishing at the far end live."""
    rng = random.Random(seed)
    n = rng.randint(2, 5)
    d = random_datum(n, rng.randint(2, n), 0, seed)
    chain = d.side1.chain
    t = chain.degrees[-1]
    for i in range(n, n - t + 1, -1):
        d, _ = contract_step(d, 1, n - i + 1)
    assert d.side1.chain == chain
    out, _ = contract_step(d, 1, t)
    merged = out.side1
    big = merged.degrees[-1]
    pair = subchain(chain, chain.r - 1, chain.r)
    lifted = evaluate(pair, section_space(pair, False, True), 1, "left")
    links_old, links_new = d.side1.links(), merged.links()
    # compare in the original coordinates of the neighbor's left fiber
    change = links_new[-1] @ links_old[-2].inverse()
    assert Subspace.coordinate(range(big), n) == lifted.map(change)


def test_insert_examples(worked_datum):
    d1, b1 = contract_step(worked_datum, 1, 1)
    d2, b2 = contract_step(d1, 1, 2)
    assert insert_step(d2, 2, unit_bf(2, 0), 1) == d2
    back1 = insert_step(d2, 1, b2, 1)
    assert back1.side1.degrees == (2,)
    assert contract_step(back1, 1, 2) == (d2, b2)
    back2 = insert_step(d1, 1, b1, 2)
    assert back2.side1.degrees == (1, 1)
    assert contract_step(back2, 1, 1) == (d1, b1)
    assert datum_equivalent(back2, worked_datum)


def test_insert_errors(worked_datum):
    d1, b1 = contract_step(worked_datum, 1, 1)
    with pytest.raises(StructuralError):
        insert_step(d1, 1, b1, 1)  # rank mismatch
    bad = BfMorphism(2, 0, Matrix.identity(2), Matrix.identity(2), 1)
    with pytest.raises(StructuralError):
        insert_step(d1, 1, bad, 2)
    # degree-2 insertion next to a degree-2 neighbour has no pre-image
    _, b2 = contract_step(d1, 1, 2)
    with pytest.raises(StructuralError):
        insert_step(d1, 1, b2, 1)


def test_gvbd_to_gi_examples(worked_datum):
    gi = gvbd_to_gi(GiesekerDatum.empty(2, SWAP))
    assert gi.mu == (1, 1) and gi.lam == (1, 1) and gi.phi == SWAP
    one = AttachedChain(1, ChainBundle(1, (1,), ()), Matrix.identity(1))
    gi = gvbd_to_gi(GiesekerDatum(1, one, AttachedChain.empty(1), Matrix.identity(1)))
    assert gi.mu == (0,) and gi.lam == (1,)
    gi = gvbd_to_gi(worked_datum)
    assert gi.mu == (0, 0) and gi.lam == (1, 1)
    assert validate_gi(gi) == []


def test_gvbd_to_gi_rejects_inadmissible():
    one = AttachedChain(1, ChainBundle(1, (1,), ()), Matrix.identity(1))
    with pytest.raises(StructuralError):
        gvbd_to_gi(GiesekerDatum(1, one, one, Matrix.identity(1)))


def test_gi_to_gvbd_examples(worked_datum):
    units = GeneralizedIsomorphism(2, [unit_bf(2, 0), unit_bf(2, 1)], [unit_bf(2, 0), unit_bf(2, 1)], SWAP)
    d = gi_to_gvbd(units)
    assert d.side1.r == d.side2.r == 0 and d.phi == SWAP
    m = lambda x: Matrix.from_rows([[x]])
    gi = GeneralizedIsomorphism(1, [BfMorphism(1, 0, m(0), m(1), 0)], [BfMorphism(1, 1, m(1), m(1), 0)], m(1))
    d = gi_to_gvbd(gi)
    assert d.side1.degrees == (1,) and d.side2.r == 0
    assert gi_to_gvbd(gvbd_to_gi(worked_datum)).side1.degrees == (1, 1)


def test_roundtrip_examples(worked_datum):
    assert roundtrip_check(GiesekerDatum.empty(3)).ok
    rep = roundtrip_check(worked_datum)
    assert rep.ok and rep.fingerprint["mu_zeros"] == [1, 2] and rep.fingerprint["dimQ"] == 2


@pytest.mark.parametrize("seed", range(30))
def test_stage_bookkeeping(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 5)
    t = rng.randint(0, n)
    l1 = rng.randint(0, t)
    d = random_datum(n, l1, t - l1, seed)
    gi = gvbd_to_gi(d)
    comp_e, comp_f, _, _ = composite_maps(gi)
    assert comp_e.rank() == n - sum(d.side1.degrees)
    assert comp_f.rank() == n - sum(d.side2.degrees)
    # each zero stage i sits at a contracted degree n - i + 1 threshold
    for i in gi.mu_zeros():
        assert gi.e_stages[i - 1].bf_rank == i - 1


@pytest.mark.parametrize("seed", range(15))
def test_gi_roundtrip_with_moved_stages(seed):
    gi = random_gi(random.Random(seed).randint(1, 4), seed)
    assert roundtrip_check(gi, seed=seed).ok

import random

import pytest

from gieseker.chainbundle import ChainBundle
from gieseker.exactlin import Matrix
from gieseker.gvbd import (
    AttachedChain,
    GiesekerDatum,
    admissible_pair,
    concatenated_chain,
    datum_equivalent,
    extremal_degrees,
    random_automorphism,
    random_datum,
    transform_datum,
)

from conftest import I2, SWAP


def test_concatenation_shapes(worked_datum):
    assert concatenated_chain(GiesekerDatum.empty(2)).r == 0
    assert concatenated_chain(worked_datum) == worked_datum.side1.chain
    one = AttachedChain(2, ChainBundle(2, (1,), ()), I2)
    both = GiesekerDatum(2, one, one, SWAP)
    glued = concatenated_chain(both)
    assert glued.degrees == (1, 1) and glued.gluings == (SWAP,)


def test_admissible_pair(worked_datum):
    assert admissible_pair(GiesekerDatum.empty(3, Matrix.diag([1, 2, 3])))
    assert admissible_pair(worked_datum)
    one = AttachedChain(1, ChainBundle(1, (1,), ()), Matrix.identity(1))
    assert not admissible_pair(GiesekerDatum(1, one, one, Matrix.identity(1)))


def test_extremal_degrees(worked_datum):
    assert extremal_degrees(GiesekerDatum.empty(2)) == (3, 3)
    assert extremal_degrees(worked_datum) == (1, 3)


def test_attach_invariant():
    with pytest.raises(ValueError):
        AttachedChain(2, ChainBundle(2, (1,), ()), None)
    with pytest.raises(ValueError):
        AttachedChain(2, ChainBundle.empty(2), I2)


def test_json_round_trip(worked_datum):
    assert GiesekerDatum.from_json(worked_datum.to_json()) == worked_datum
    bad = worked_datum.to_json()
    del bad["v"]
    with pytest.raises(ValueError):
        GiesekerDatum.from_json(bad)


def test_equivalence_basics(worked_datum):
    assert datum_equivalent(worked_datum, worked_datum)
    other = GiesekerDatum(2, AttachedChain(2, ChainBundle(2, (2,), ()), I2), AttachedChain.empty(2), I2)
    assert not datum_equivalent(worked_datum, other)


@pytest.mark.parametrize("seed", range(25))
def test_equivalence_under_automorphisms(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 4)
    total = rng.randint(0, n)
    len1 = rng.randint(0, total)
    d = random_datum(n, len1, total - len1, seed)
    a1 = [random_automorphism(n, k, rng) for k in d.side1.degrees]
    a2 = [random_automorphism(n, k, rng) for k in d.side2.degrees]
    e = transform_datum(d, a1, a2)
    assert admissible_pair(e)
    assert datum_equivalent(d, e, seed=seed) and datum_equivalent(e, d, seed=seed)


def test_base_isomorphisms():
    d = random_datum(3, 1, 1, 4)
    beta = Matrix.from_rows([[1, 1, 0], [0, 1, 0], [0, 0, 2]])
    moved = transform_datum(d, base1=beta)
    assert datum_equivalent(d, moved, base_isomorphisms=True)


def test_random_datum():
    d = random_datum(1, 1, 0, 0)
    assert d.side1.degrees == (1,) and d.side2.r == 0
    assert random_datum(4, 2, 1, 9).to_json() == random_datum(4, 2, 1, 9).to_json()
    with pytest.raises(ValueError):
        random_datum(2, 2, 1, 0)
    for s in range(30):
        rng = random.Random(s)
        n = rng.randint(1, 5)
        t = rng.randint(0, n)
        l1 = rng.randint(0, t)
        assert admissible_pair(random_datum(n, l1, t - l1, s))

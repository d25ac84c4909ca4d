import pytest

from gieseker.chainbundle import ChainBundle
from gieseker.exactlin import Matrix
from gieseker.gvbd import AttachedChain, GiesekerDatum

SWAP = Matrix.from_rows([[0, 1], [1, 0]])
I2 = Matrix.identity(2)


@pytest.fixture
def swap_chain():
    return ChainBundle(2, (1, 1), (SWAP,))


@pytest.fixture
def identity_chain():
    return ChainBundle(2, (1, 1), (I2,))


@pytest.fixture
def worked_datum():
    """n = 2, side 1 the swap-glued (1,1) chain, side 2 empty."""
    side1 = AttachedChain(2, ChainBundle(2, (1, 1), (SWAP,)), I2)
    return GiesekerDatum(2, side1, AttachedChain.empty(2), I2)

import numpy as np
import pytest

from reachmax.chain import ChainSpec
from reachmax.oracle import NULL, SIGMA, random_chain


def make_e1():
    """One transient state: self-loop 0.5 unselected; 0.4 loop / 0.2 target once selected."""
    return ChainSpec.from_rows(
        1, (NULL, SIGMA), SIGMA, [1.0],
        q={1: {1: 0.4, SIGMA: 0.2, NULL: 0.4}},
        q_bar={1: {1: 0.5, NULL: 0.5}},
    )


def make_e2():
    """Two states: 1 -> 2 -> exit unselected; every selected state jumps to the target."""
    return ChainSpec.from_rows(
        2, (NULL, SIGMA), SIGMA, [1.0, 0.0],
        q={1: {SIGMA: 1.0}, 2: {SIGMA: 1.0}},
        q_bar={1: {2: 1.0}, 2: {NULL: 1.0}},
    )


@pytest.fixture
def e1():
    return make_e1()


@pytest.fixture
def e2():
    return make_e2()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_chains(count, n_lo, n_hi, seed, **kw):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(n_lo, n_hi + 1))
        yield random_chain(n, rng, **kw), rng

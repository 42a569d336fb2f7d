"""Pytest configuration and fixtures."""

import numpy as np
import pytest

from smk.core.bernstein import MixtureComponent, StableMixtureExponent, WaitingTimeLaw
from smk.core.samplers import RngStream
from smk.core.semi_markov import SemiMarkovModel


@pytest.fixture
def rng():
    """Fresh stream for seed 12345."""
    return RngStream(12345)


@pytest.fixture
def two_state_fractional():
    """Symmetric two-state benchmark with alpha = 0.6, theta = 1."""
    return SemiMarkovModel.two_state_symmetric(alpha=0.6, theta=1.0)


@pytest.fixture
def two_state_markov():
    """Symmetric two-state chain with exponential holding times."""
    return SemiMarkovModel.two_state_symmetric(alpha=1.0, theta=1.0)


@pytest.fixture
def variable_order_model():
    """Two states of orders 0.5 and 0.9 with unit rates."""
    return SemiMarkovModel.from_orders([[0.0, 1.0], [1.0, 0.0]], [1.0, 1.0], [0.5, 0.9])


@pytest.fixture
def three_state_model():
    """Three-state model with self-jumps, mixed orders and rates."""
    return SemiMarkovModel.from_orders(
        [[0.2, 0.5, 0.3], [0.4, 0.0, 0.6], [0.5, 0.5, 0.0]],
        [1.0, 2.0, 0.5],
        [0.7, 1.0, 0.5],
    )


@pytest.fixture
def mixture_model():
    """Two states, one carrying a two-component stable mixture."""
    mixture = StableMixtureExponent(
        components=[MixtureComponent(weight=0.5, alpha=0.4), MixtureComponent(weight=0.5, alpha=0.8)]
    )
    laws = [
        WaitingTimeLaw(exponent=mixture, theta=1.0),
        WaitingTimeLaw(exponent={"kind": "stable", "alpha": 0.6}, theta=1.0),
    ]
    return SemiMarkovModel(jump_matrix=[[0.0, 1.0], [1.0, 0.0]], laws=laws)


@pytest.fixture
def cemetery_model():
    """State 0 jumps once into the absorbing state 1."""
    return SemiMarkovModel.from_orders([[0.0, 1.0], [0.0, 1.0]], [1.0, 1.0], [0.6, 0.6])


def ks_critical(n: int, m: int | None = None) -> float:
    """1% critical value of the one- or two-sample KS statistic."""
    if m is None:
        return 1.63 / np.sqrt(n)
    return 1.63 * np.sqrt((n + m) / (n * m))

"""Shared instance builders for the test suite."""

import pytest

import mixtv as mx


def mixture(weights, components) -> mx.Mixture:
    return mx.validate_mixture((weights, components))


def uniform_bits(n: int) -> mx.Mixture:
    """Single-component uniform distribution over {0,1}^n."""
    return mixture([1.0], [[[0.5, 0.5]] * n])


def point_mass(values, q: int = 2) -> mx.Mixture:
    """Single-component point mass at the given configuration."""
    rows = []
    for v in values:
        row = [0.0] * q
        row[v] = 1.0
        rows.append(row)
    return mixture([1.0], [rows])


@pytest.fixture(scope="session")
def uniform2() -> mx.Mixture:
    return uniform_bits(2)


@pytest.fixture(scope="session")
def point00() -> mx.Mixture:
    return point_mass((0, 0))


@pytest.fixture(scope="session")
def two_component_pair() -> tuple[mx.Mixture, mx.Mixture]:
    """n=1 instance: half point-at-0 plus half uniform bit, vs a (0.7, 0.3) bit."""
    p = mixture([0.5, 0.5], [[[1.0, 0.0]], [[0.5, 0.5]]])
    q = mixture([1.0], [[[0.7, 0.3]]])
    return p, q


def lex_configs(n: int, q: int) -> list[tuple[int, ...]]:
    """All configurations in the lexicographic order used by the tables."""
    out = []
    for idx in range(q**n):
        out.append(tuple((idx // q ** (n - 1 - i)) % q for i in range(n)))
    return out

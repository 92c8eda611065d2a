import random
from fractions import Fraction

import pytest

from glrough.freebasis import compute_generators
from glrough.series import ForestSeries
from glrough.trees import enumerate_forests


@pytest.fixture(scope="session")
def basis22():
    return compute_generators(2, 2)


@pytest.fixture(scope="session")
def basis32():
    return compute_generators(3, 2)


@pytest.fixture(scope="session")
def basis42():
    return compute_generators(4, 2)


@pytest.fixture(scope="session")
def basis21():
    return compute_generators(2, 1)


@pytest.fixture(scope="session")
def basis51():
    return compute_generators(5, 1)


def random_series(rng: random.Random, max_degree: int, labels: int, nterms: int = 4,
                  include_unit: bool = False) -> ForestSeries:
    """Sparse random series with small rational coefficients."""
    pool = [f for n in range(0 if include_unit else 1, max_degree + 1)
            for f in enumerate_forests(n, labels)]
    terms = {}
    for f in rng.sample(pool, min(nterms, len(pool))):
        c = Fraction(rng.randint(-6, 6), rng.randint(1, 4))
        if c:
            terms[f] = c
    return ForestSeries(terms, max_degree)


def random_primitive(rng: random.Random, max_degree: int, labels: int,
                     nterms: int = 3) -> ForestSeries:
    """Random series supported on single trees (primitive under unshuffle)."""
    pool = [f for n in range(1, max_degree + 1)
            for f in enumerate_forests(n, labels) if len(f.trees) == 1]
    terms = {}
    for f in rng.sample(pool, min(nterms, len(pool))):
        c = Fraction(rng.randint(-6, 6), rng.randint(1, 4))
        if c:
            terms[f] = c
    return ForestSeries(terms, max_degree)

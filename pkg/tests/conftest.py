import numpy as np
import pytest

from quncertainty.core import projector, sample_random


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def random_states(d, n, seed, kind="ginibre_mixed"):
    rng = np.random.default_rng([seed, d])
    if kind == "pure":
        return [projector(sample_random("haar_pure", d, rng)) for _ in range(n)]
    return [sample_random(kind, d, rng) for _ in range(n)]


PLUS = projector(np.array([1, 1]) / np.sqrt(2))
MINUS = projector(np.array([1, -1]) / np.sqrt(2))

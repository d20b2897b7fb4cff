import itertools
import random

import pytest
from hypothesis import HealthCheck, settings

from ctswitch.ctm import DirichletPrior, NodeHyperPrior

settings.register_profile(
    "ctswitch",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ctswitch")


def all_contexts(A, max_len):
    for k in range(max_len + 1):
        yield from itertools.product(range(A), repeat=k)


def random_priors(rng: random.Random, A: int, d: int):
    """Per-node random g and beta."""
    g = NodeHyperPrior(d, rng.random(), {s: rng.random() for s in all_contexts(A, d - 1)})
    beta = DirichletPrior(
        A,
        rng.uniform(0.1, 3.0),
        {s: tuple(rng.uniform(0.1, 3.0) for _ in range(A)) for s in all_contexts(A, d)},
    )
    return g, beta


@pytest.fixture
def rng():
    return random.Random(1234)

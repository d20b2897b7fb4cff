import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctswitch.ctm import ContextTreeModel, DirichletPrior, NodeHyperPrior, enumerate_models, model_prior
from ctswitch.oracle import exact_model_mixture, exact_segment_marginal
from ctswitch.predictor import SuperposedTree, absorb_symbol, kt_prob, weighted_predict

from conftest import random_priors


def run_tree(tree, xs):
    """Cumulative product of the predictive probabilities of xs."""
    p = 1.0
    for t, x in enumerate(xs):
        p *= weighted_predict(tree, xs[:t])[x]
        absorb_symbol(tree, xs[:t], x)
    return p


def test_fresh_tree_is_uniform_under_symmetric_prior():
    tree = SuperposedTree(3, 2, NodeHyperPrior(2), DirichletPrior(3))
    assert tree.weighted_predict([]) == pytest.approx([1 / 3] * 3, abs=1e-15)


def test_kt_sequence_by_hand():
    # d = 0 reduces to the KT estimator: P(00) = 1/2 * 3/4
    tree = SuperposedTree(2, 0, NodeHyperPrior(0), DirichletPrior(2))
    assert run_tree(tree, [0, 0]) == pytest.approx(0.375, rel=1e-15)
    assert tree.root.counts == [2, 0]
    assert kt_prob(tree.root, (0.5, 0.5), 1) == pytest.approx(0.5 / 3)


def test_absorb_returns_prior_prediction():
    tree = SuperposedTree(2, 2, NodeHyperPrior(2), DirichletPrior(2))
    expected = tree.weighted_predict([1, 0])[1]
    assert tree.absorb_symbol([1, 0], 1) == expected


def test_depth_mismatch_rejected():
    with pytest.raises(ValueError):
        SuperposedTree(2, 2, NodeHyperPrior(1), DirichletPrior(2))


@given(
    st.integers(2, 3),
    st.integers(0, 2),
    st.integers(0, 2**32 - 1),
    st.integers(1, 12),
)
def test_cumulative_prediction_equals_model_mixture(A, d, seed, n):
    rng = random.Random(seed)
    g, beta = random_priors(rng, A, d)
    pad = rng.randrange(A)
    xs = [rng.randrange(A) for _ in range(n)]
    tree = SuperposedTree(A, d, g, beta, pad)
    assert run_tree(tree, xs) == pytest.approx(exact_model_mixture(xs, g, beta, d, pad), rel=1e-10)


@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_root_posterior_g_is_split_posterior(seed, n):
    # after the data, g at the root is P(root is internal | x)
    rng = random.Random(seed)
    g, beta = random_priors(rng, 2, 2)
    xs = [rng.randrange(2) for _ in range(n)]
    tree = SuperposedTree(2, 2, g, beta)
    run_tree(tree, xs)
    joint = {m: model_prior(m, g) * exact_segment_marginal(xs, m, beta) for m in enumerate_models(2, 2)}
    split = math.fsum(p for m, p in joint.items() if () not in m.leaves)
    assert tree.root.posterior_g == pytest.approx(split / math.fsum(joint.values()), rel=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_predictions_sum_to_one(seed):
    rng = random.Random(seed)
    g, beta = random_priors(rng, 3, 2)
    tree = SuperposedTree(3, 2, g, beta)
    xs = []
    for _ in range(20):
        assert math.fsum(tree.weighted_predict(xs)) == pytest.approx(1.0, abs=1e-12)
        x = rng.randrange(3)
        tree.absorb_symbol(xs, x)
        xs.append(x)


def test_nodes_are_allocated_lazily():
    tree = SuperposedTree(2, 3, NodeHyperPrior(3), DirichletPrior(2))
    assert tree.node_count() == 1
    tree.weighted_predict([1, 1, 1])
    assert tree.node_count() == 1
    tree.absorb_symbol([1, 1, 1], 0)
    assert tree.node_count() == 4
    assert sum(1 for _ in tree.nodes()) == 4


def test_single_model_prior_reduces_to_that_model():
    # g = 1 above depth 2 forces the full tree
    g = NodeHyperPrior(2, 1.0)
    beta = DirichletPrior(2)
    xs = [0, 1, 1, 0, 1, 0, 0]
    tree = SuperposedTree(2, 2, g, beta)
    assert run_tree(tree, xs) == pytest.approx(exact_segment_marginal(xs, ContextTreeModel.full(2, 2), beta), rel=1e-12)

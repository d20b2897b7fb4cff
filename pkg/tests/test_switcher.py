import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctswitch import switcher as sw_mod
from ctswitch.ctm import DirichletPrior, NodeHyperPrior
from ctswitch.oracle import exact_step_probs, exact_switch_prob
from ctswitch.predictor import SuperposedTree
from ctswitch.switcher import ConfigError, DenseSwitcher, ReferenceSwitcher, SwitchConfig, make_switcher

from conftest import random_priors

ENGINES = ["reference", "dense"]


def random_config(rng, A=2, depths=(0, 1, 2), alpha=None):
    d = rng.choice(depths)
    g, beta = random_priors(rng, A, d)
    a = rng.random() if alpha is None else alpha
    return SwitchConfig(A, d, a, g, beta, rng.randrange(A))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"alphabet_size": 1},
        {"alpha": -0.1},
        {"alpha": 1.5},
        {"depth": -1},
        {"pad_symbol": 2},
        {"g": 1.2},
        {"beta": 0.0},
        {"g": NodeHyperPrior(3)},
        {"beta": DirichletPrior(3)},
        {"prune_epsilon": 1.0},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(ConfigError):
        SwitchConfig(**kwargs)


def test_unknown_engine():
    with pytest.raises(ConfigError):
        make_switcher(SwitchConfig(), "gpu")


def test_auto_engine_choice():
    assert isinstance(make_switcher(SwitchConfig(2, 2)), DenseSwitcher)
    assert isinstance(make_switcher(SwitchConfig(256, 1)), ReferenceSwitcher)


@pytest.mark.parametrize("engine", ENGINES)
def test_initial_state(engine):
    s = sw_mod.init(SwitchConfig(2, 2, 0.01), engine)
    assert s.t == 0
    assert s.v.size == 0
    np.testing.assert_allclose(sw_mod.predict(s), [0.5, 0.5], atol=1e-15)


@pytest.mark.parametrize("engine", ENGINES)
def test_first_step(engine):
    s = make_switcher(SwitchConfig(3, 1, 0.2), engine)
    p, s = sw_mod.advance(s, 2)
    assert p == pytest.approx(1 / 3, rel=1e-15)
    np.testing.assert_allclose(s.v, [0.8, 0.2], rtol=1e-15)
    np.testing.assert_array_equal(s.starts, [1, 2])


@pytest.mark.parametrize("engine", ENGINES)
def test_hand_example_second_step(engine):
    # d = 0, alpha = 0.3: 0.7 * 3/4 + 0.3 * 1/2
    s = make_switcher(SwitchConfig(2, 0, 0.3, 0.5, 0.5), engine)
    s.advance(0)
    assert s.predict()[0] == pytest.approx(0.675, rel=1e-14)
    assert s.advance(0) == pytest.approx(0.3375 / 0.5, rel=1e-14)


@pytest.mark.parametrize("engine", ENGINES)
def test_three_zeros_chain_rule(engine):
    c = SwitchConfig(2, 0, 0.3, 0.5, 0.5)
    s = make_switcher(c, engine)
    p = math.prod(s.run([0, 0, 0]))
    assert p == pytest.approx(exact_switch_prob([0, 0, 0], 0.3, c.hyper_g, c.dirichlet, 0), rel=1e-14)


@pytest.mark.parametrize("engine", ENGINES)
def test_rejects_out_of_alphabet(engine):
    s = make_switcher(SwitchConfig(2, 1), engine)
    with pytest.raises(ValueError):
        s.advance(2)
    with pytest.raises(ValueError):
        s.advance(-1)


@given(st.integers(0, 2**32 - 1), st.integers(1, 9), st.sampled_from(ENGINES))
def test_matches_oracle(seed, n, engine):
    rng = random.Random(seed)
    c = random_config(rng)
    xs = [rng.randrange(2) for _ in range(n)]
    exact = exact_step_probs(xs, c.alpha, c.hyper_g, c.dirichlet, c.depth, c.pad_symbol)
    got = make_switcher(c, engine).run(xs)
    np.testing.assert_allclose(got, exact, rtol=1e-9)


@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_matches_oracle_ternary(seed, n):
    rng = random.Random(seed)
    c = random_config(rng, A=3, depths=(0, 1))
    xs = [rng.randrange(3) for _ in range(n)]
    exact = exact_step_probs(xs, c.alpha, c.hyper_g, c.dirichlet, c.depth, c.pad_symbol)
    np.testing.assert_allclose(make_switcher(c).run(xs), exact, rtol=1e-9)


@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_predict_matches_oracle_ratios(seed, n):
    rng = random.Random(seed)
    c = random_config(rng)
    xs = [rng.randrange(2) for _ in range(n)]
    s = make_switcher(c)
    s.run(xs[:-1])
    base = exact_switch_prob(xs[:-1], c.alpha, c.hyper_g, c.dirichlet, c.depth, c.pad_symbol)
    expected = [exact_switch_prob(xs[:-1] + [a], c.alpha, c.hyper_g, c.dirichlet, c.depth, c.pad_symbol) / base for a in (0, 1)]
    np.testing.assert_allclose(s.predict(), expected, rtol=1e-9)


@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_engines_bit_identical(seed, A):
    rng = random.Random(seed)
    c = random_config(rng, A=A, depths=(0, 1, 2))
    xs = [rng.randrange(A) for _ in range(60)]
    ref, dense = make_switcher(c, "reference"), make_switcher(c, "dense")
    for x in xs:
        assert ref.predict().tolist() == dense.predict().tolist()
        assert ref.advance(x) == dense.advance(x)
        assert ref.v.tolist() == dense.v.tolist()
    assert ref.last_changepoint_estimate() == dense.last_changepoint_estimate()


def test_dense_tree_state_matches_reference():
    c = SwitchConfig(2, 2, 0.1)
    xs = [0, 1, 1, 0, 1, 1, 1, 0]
    ref, dense = make_switcher(c, "reference"), make_switcher(c, "dense")
    ref.run(xs)
    dense.run(xs)
    for i, tree in enumerate(ref.trees):
        counts = {node.context: node.counts for node in tree.nodes() if any(node.counts)}
        assert {s: list(v) for s, v in dense.tree_counts(i).items()} == counts
        g = dense.tree_posterior_g(i)
        for node in tree.nodes():
            assert g[node.context] == node.posterior_g


@given(st.integers(0, 2**32 - 1))
def test_posterior_normalized_every_step(seed):
    rng = random.Random(seed)
    c = random_config(rng, A=rng.choice([2, 3]))
    s = make_switcher(c)
    for _ in range(150):
        s.advance(rng.randrange(c.alphabet_size))
        assert abs(math.fsum(s.v) - 1.0) <= 1e-12
        assert s.v.size == (s.t + 1 if c.alpha > 0 else 1)


def test_posterior_normalized_on_long_run():
    rng = random.Random(3)
    s = make_switcher(SwitchConfig(2, 2, 0.001))
    for _ in range(3000):
        s.advance(rng.randrange(2))
    assert abs(math.fsum(s.v) - 1.0) <= 1e-12


@pytest.mark.parametrize("engine", ENGINES)
def test_zero_alpha_reduces_to_single_tree(engine):
    rng = random.Random(8)
    c = random_config(rng, depths=(2,), alpha=0.0)
    tree = SuperposedTree(2, 2, c.hyper_g, c.dirichlet, c.pad_symbol)
    s = make_switcher(c, engine)
    xs = []
    for _ in range(80):
        x = rng.randrange(2)
        assert s.advance(x) == tree.absorb_symbol(xs, x)
        xs.append(x)
        assert s.v.tolist() == [1.0]
        assert s.last_changepoint_estimate() == 1


@pytest.mark.parametrize("engine", ENGINES)
def test_alpha_one_always_fresh(engine):
    s = make_switcher(SwitchConfig(2, 1, 1.0), engine)
    for t, x in enumerate([0, 0, 1, 0, 0], start=1):
        assert s.advance(x) == 0.5
        assert s.last_changepoint_estimate() == t + 1


def test_estimate_before_data_and_ties():
    s = make_switcher(SwitchConfig(2, 1, 0.5))
    assert s.last_changepoint_estimate() == 1
    s.advance(0)
    # v = (0.5, 0.5): the tie goes to the earlier start
    assert s.v.tolist() == [0.5, 0.5]
    assert sw_mod.last_changepoint_estimate(s) == 1


def test_estimate_follows_an_obvious_change():
    s = make_switcher(SwitchConfig(2, 0, 0.01))
    s.run([0] * 200 + [1] * 60)
    assert abs(s.last_changepoint_estimate() - 201) <= 3


@pytest.mark.parametrize("engine", ENGINES)
def test_pruning_bounds_live_trees(engine):
    rng = random.Random(0)
    c = SwitchConfig(2, 2, 0.1, prune_epsilon=1e-6)
    assert not c.exact
    s = make_switcher(c, engine)
    for _ in range(1500):
        s.advance(rng.randrange(2))
        assert abs(math.fsum(s.v) - 1.0) <= 1e-12
    assert s.pruned_candidates > 0
    assert s.v.size < 400


def test_pruned_engines_agree():
    rng = random.Random(4)
    c = SwitchConfig(2, 2, 0.2, prune_epsilon=1e-4)
    ref, dense = make_switcher(c, "reference"), make_switcher(c, "dense")
    for _ in range(300):
        x = rng.randrange(2)
        assert ref.advance(x) == dense.advance(x)
    assert ref.starts.tolist() == dense.starts.tolist()


def test_code_length_bits():
    c = SwitchConfig(2, 0, 0.3)
    expected = -math.log2(exact_switch_prob([0, 0, 0], 0.3, c.hyper_g, c.dirichlet, 0))
    assert sw_mod.code_length_bits(c, [0, 0, 0]) == pytest.approx(expected, rel=1e-13)

"""Exhaustive Bayes mixture over change patterns and context tree models.

Exponential in everything; meant for tiny instances and as ground truth for
the efficient switcher.  Segment marginals use the closed-form
Dirichlet-multinomial (log-Gamma) expression and never touch the predictor.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from functools import lru_cache
from typing import Sequence

from .ctm import (
    Context,
    ContextTreeModel,
    DirichletPrior,
    NodeHyperPrior,
    enumerate_models,
    model_prior,
    padded_context,
)

MAX_SWITCH_LENGTH = 16


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _logsumexp(values: Sequence[float]) -> float:
    top = max(values, default=-math.inf)
    if top == -math.inf:
        return -math.inf
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def leaf_counts(segment: Sequence[int], m: ContextTreeModel, pad_symbol: int) -> dict[Context, list[int]]:
    counts: dict[Context, list[int]] = defaultdict(lambda: [0] * m.alphabet_size)
    for t, x in enumerate(segment):
        ctx = padded_context(segment[:t], m.max_depth, pad_symbol)
        counts[m.leaf_for(ctx)][x] += 1
    return counts


def log_segment_marginal(segment: Sequence[int], m: ContextTreeModel, beta: DirichletPrior, pad_symbol: int = 0) -> float:
    total = 0.0
    for s, n in leaf_counts(segment, m, pad_symbol).items():
        b = beta(s)
        total += math.lgamma(math.fsum(b)) - math.lgamma(math.fsum(b) + sum(n))
        total += math.fsum(math.lgamma(bi + ni) - math.lgamma(bi) for bi, ni in zip(b, n))
    return total


def exact_segment_marginal(segment: Sequence[int], m: ContextTreeModel, beta: DirichletPrior, pad_symbol: int = 0) -> float:
    """Dirichlet-multinomial marginal of ``segment`` under model ``m``."""
    if len(segment) == 0:
        raise ValueError("segment must be non-empty")
    return math.exp(log_segment_marginal(segment, m, beta, pad_symbol))


def sequential_segment_marginal(segment: Sequence[int], m: ContextTreeModel, beta: DirichletPrior, pad_symbol: int = 0) -> float:
    """Same marginal as a product of sequential Dirichlet predictive ratios."""
    counts: dict[Context, list[int]] = defaultdict(lambda: [0] * m.alphabet_size)
    p = 1.0
    for t, x in enumerate(segment):
        s = m.leaf_for(padded_context(segment[:t], m.max_depth, pad_symbol))
        b, n = beta(s), counts[s]
        p *= (b[x] + n[x]) / (math.fsum(b) + sum(n))
        n[x] += 1
    return p


@lru_cache(maxsize=64)
def _models(alphabet_size: int, d: int) -> tuple[ContextTreeModel, ...]:
    return tuple(enumerate_models(alphabet_size, d))


def log_model_mixture(
    segment: Sequence[int],
    g: NodeHyperPrior,
    beta: DirichletPrior,
    d: int,
    pad_symbol: int = 0,
) -> float:
    terms = []
    for m in _models(beta.alphabet_size, d):
        prior = model_prior(m, g)
        if prior > 0:
            terms.append(math.log(prior) + log_segment_marginal(segment, m, beta, pad_symbol))
    return _logsumexp(terms)


def exact_model_mixture(
    segment: Sequence[int],
    g: NodeHyperPrior,
    beta: DirichletPrior,
    d: int,
    pad_symbol: int = 0,
) -> float:
    """Sum over all models m of P(m) times the segment marginal under m."""
    return math.exp(log_model_mixture(segment, g, beta, d, pad_symbol))


def change_pattern_log_prior(pattern: Sequence[int], alpha: float) -> float:
    """log pi(c) for w_2..w_n given as ``pattern``; w_1 = 1 is implicit."""
    k = sum(pattern)
    rest = len(pattern) - k
    # skip empty factors so alpha in {0, 1} gives 0 or -inf rather than nan
    return (k * _log(alpha) if k else 0.0) + (rest * _log(1.0 - alpha) if rest else 0.0)


def log_switch_prob(
    x: Sequence[int],
    alpha: float,
    g: NodeHyperPrior,
    beta: DirichletPrior,
    d: int,
    pad_symbol: int = 0,
) -> float:
    n = len(x)
    if n > MAX_SWITCH_LENGTH:
        raise ValueError(f"sequence too long for the exhaustive oracle: n={n} > {MAX_SWITCH_LENGTH}")
    if n == 0:
        return 0.0
    x = tuple(x)
    seg_cache: dict[tuple[int, int], float] = {}

    def seg(i: int, j: int) -> float:
        key = (i, j)
        if key not in seg_cache:
            seg_cache[key] = log_model_mixture(x[i:j], g, beta, d, pad_symbol)
        return seg_cache[key]

    terms = []
    for pattern in itertools.product((0, 1), repeat=n - 1):
        lp = change_pattern_log_prior(pattern, alpha)
        if lp == -math.inf:
            continue
        starts = [0] + [t + 1 for t, w in enumerate(pattern) if w]
        bounds = starts + [n]
        terms.append(lp + math.fsum(seg(bounds[j], bounds[j + 1]) for j in range(len(starts))))
    return _logsumexp(terms)


def exact_switch_prob(
    x: Sequence[int],
    alpha: float,
    g: NodeHyperPrior,
    beta: DirichletPrior,
    d: int,
    pad_symbol: int = 0,
) -> float:
    """Marginal probability of ``x`` summed over every change pattern and model."""
    return math.exp(log_switch_prob(x, alpha, g, beta, d, pad_symbol))


def exact_step_probs(
    x: Sequence[int],
    alpha: float,
    g: NodeHyperPrior,
    beta: DirichletPrior,
    d: int,
    pad_symbol: int = 0,
) -> list[float]:
    """Per-step conditionals p(x_t | x^{t-1}) as ratios of prefix marginals."""
    logs = [log_switch_prob(x[:t], alpha, g, beta, d, pad_symbol) for t in range(len(x) + 1)]
    return [math.exp(logs[t] - logs[t - 1]) for t in range(1, len(x) + 1)]

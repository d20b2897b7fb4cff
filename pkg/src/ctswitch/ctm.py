"""Context tree models, hyper-priors and entropy rates.

A context is a tuple of past symbols ordered most recent first, so the node
``(1, 0)`` means ``x[t-1] == 1`` and ``x[t-2] == 0``.  The root is ``()``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

Context = tuple[int, ...]

MAX_ENUMERATED_MODELS = 1_000_000


class EnumerationTooLarge(ValueError):
    """Raised when brute-force model enumeration would be intractable."""


@dataclass(frozen=True)
class Alphabet:
    size: int

    def __post_init__(self) -> None:
        if int(self.size) != self.size or self.size < 2:
            raise ValueError(f"alphabet size must be an integer >= 2, got {self.size!r}")

    def check(self, symbols: Iterable[int]) -> None:
        for i, a in enumerate(symbols):
            if not 0 <= a < self.size:
                raise ValueError(f"symbol {a!r} at position {i} outside alphabet of size {self.size}")


def padded_context(history: Sequence[int], depth: int, pad_symbol: int) -> Context:
    """The last ``depth`` symbols of ``history``, most recent first, left-padded.

    ``history`` is the within-segment past in time order.
    """
    n = len(history)
    return tuple(history[n - k] if k <= n else pad_symbol for k in range(1, depth + 1))


@dataclass(frozen=True)
class ContextTreeModel:
    """A complete context tree: every internal node has all ``alphabet_size`` children."""

    alphabet_size: int
    max_depth: int
    leaves: frozenset[Context]
    _depth_of_deepest: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        leaves = frozenset(tuple(int(a) for a in s) for s in self.leaves)
        object.__setattr__(self, "leaves", leaves)
        Alphabet(self.alphabet_size)
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if not leaves:
            raise ValueError("a model needs at least one leaf")
        for s in leaves:
            if len(s) > self.max_depth:
                raise ValueError(f"leaf {s} deeper than max_depth {self.max_depth}")
            if any(not 0 <= a < self.alphabet_size for a in s):
                raise ValueError(f"leaf {s} uses a symbol outside the alphabet")
        internal = self.internal_nodes
        if internal & leaves:
            raise ValueError("a node cannot be both leaf and internal")
        for s in internal:
            for a in range(self.alphabet_size):
                child = s + (a,)
                if child not in leaves and child not in internal:
                    raise ValueError(f"internal node {s} is missing child {child}")
        object.__setattr__(self, "_depth_of_deepest", max(len(s) for s in leaves))

    @classmethod
    def root_only(cls, alphabet_size: int, max_depth: int = 0) -> ContextTreeModel:
        return cls(alphabet_size, max_depth, frozenset({()}))

    @classmethod
    def full(cls, alphabet_size: int, depth: int) -> ContextTreeModel:
        leaves = frozenset(itertools.product(range(alphabet_size), repeat=depth))
        return cls(alphabet_size, depth, leaves)

    @property
    def internal_nodes(self) -> frozenset[Context]:
        return frozenset(s[:k] for s in self.leaves for k in range(len(s)))

    @property
    def nodes(self) -> frozenset[Context]:
        return self.leaves | self.internal_nodes

    @property
    def depth(self) -> int:
        """Depth of the deepest leaf (may be below ``max_depth``)."""
        return self._depth_of_deepest

    def leaf_for(self, context: Sequence[int]) -> Context:
        """The leaf S_m(context) reached by following ``context`` (most recent first)."""
        s: Context = ()
        while s not in self.leaves:
            s = s + (context[len(s)],)
        return s

    def relabel(self, perm: Sequence[int]) -> ContextTreeModel:
        return ContextTreeModel(
            self.alphabet_size,
            self.max_depth,
            frozenset(tuple(perm[a] for a in s) for s in self.leaves),
        )


def count_models(alphabet_size: int, depth: int) -> int:
    """Number of complete context trees of depth <= ``depth``."""
    m = 1
    for _ in range(depth):
        m = 1 + m**alphabet_size
    return m


def enumerate_models(alphabet: Alphabet | int, d: int) -> list[ContextTreeModel]:
    size = alphabet.size if isinstance(alphabet, Alphabet) else Alphabet(alphabet).size
    if d < 0:
        raise ValueError("depth must be >= 0")
    if size**d > 2**16:
        raise EnumerationTooLarge(f"enumeration too large: |X|^d = {size}^{d} exceeds 2^16")
    n = count_models(size, d)
    if n > MAX_ENUMERATED_MODELS:
        raise EnumerationTooLarge(f"enumeration too large: {n} models for |X|={size}, d={d}")
    return [ContextTreeModel(size, d, leaves) for leaves in _subtrees(size, d, ())]


@lru_cache(maxsize=None)
def _subtree_shapes(size: int, remaining: int) -> tuple[tuple[Context, ...], ...]:
    # leaf sets of every complete tree of depth <= remaining, relative to its root
    shapes: list[tuple[Context, ...]] = [((),)]
    if remaining > 0:
        child = _subtree_shapes(size, remaining - 1)
        for combo in itertools.product(child, repeat=size):
            shapes.append(tuple((a,) + s for a, sub in enumerate(combo) for s in sub))
    return tuple(shapes)


def _subtrees(size: int, d: int, prefix: Context) -> Iterable[frozenset[Context]]:
    for shape in _subtree_shapes(size, d):
        yield frozenset(prefix + s for s in shape)


@dataclass(frozen=True)
class NodeHyperPrior:
    """Per-node probability g_s that the tree splits below node s.

    Nodes at ``max_depth`` always get 0 regardless of overrides.
    """

    max_depth: int
    default: float = 0.5
    overrides: Mapping[Context, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.default <= 1.0:
            raise ValueError(f"g default must lie in [0, 1], got {self.default}")
        for s, g in self.overrides.items():
            if not 0.0 <= g <= 1.0:
                raise ValueError(f"g for node {s} must lie in [0, 1], got {g}")

    def __call__(self, s: Context) -> float:
        if len(s) >= self.max_depth:
            return 0.0
        return self.overrides.get(tuple(s), self.default)


@dataclass(frozen=True)
class DirichletPrior:
    """Dirichlet parameters beta(i|s) with a symmetric default."""

    alphabet_size: int
    default: float = 0.5
    overrides: Mapping[Context, Sequence[float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.default > 0:
            raise ValueError(f"beta default must be positive, got {self.default}")
        for s, b in self.overrides.items():
            if len(b) != self.alphabet_size or any(not x > 0 for x in b):
                raise ValueError(f"beta for node {s} must be {self.alphabet_size} positive values")

    def __call__(self, s: Context) -> tuple[float, ...]:
        b = self.overrides.get(tuple(s))
        if b is None:
            return (float(self.default),) * self.alphabet_size
        return tuple(float(x) for x in b)


def model_prior(m: ContextTreeModel, g: NodeHyperPrior) -> float:
    p = 1.0
    for s in m.internal_nodes:
        p *= g(s)
    for s in m.leaves:
        p *= 1.0 - g(s)
    return p


class ThetaParams(dict):
    """Leaf context -> probability vector."""

    def validate(self, m: ContextTreeModel) -> None:
        if set(self) != set(m.leaves):
            missing = set(m.leaves) - set(self)
            extra = set(self) - set(m.leaves)
            raise ValueError(f"theta leaves do not match model (missing {sorted(missing)}, extra {sorted(extra)})")
        for s, vec in self.items():
            if len(vec) != m.alphabet_size:
                raise ValueError(f"theta for leaf {s} has {len(vec)} entries, expected {m.alphabet_size}")
            if any(not 0.0 < x < 1.0 for x in vec):
                raise ValueError(f"theta for leaf {s} must lie strictly inside (0, 1)")
            if abs(math.fsum(vec) - 1.0) > 1e-12:
                raise ValueError(f"theta for leaf {s} sums to {math.fsum(vec)}, not 1")


def entropy_bits(p: Sequence[float]) -> float:
    return -math.fsum(x * math.log2(x) for x in p if x > 0)


def stationary_distribution(transition: np.ndarray, tol: float = 1e-12, max_iter: int = 10**6) -> np.ndarray:
    """Stationary row vector of a stochastic matrix by power iteration."""
    n = transition.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ transition
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() < tol:
            return nxt
        pi = nxt
    raise RuntimeError(f"power iteration did not converge within {max_iter} iterations")


def context_chain(m: ContextTreeModel, theta: Mapping[Context, Sequence[float]]):
    """States (contexts of the deepest leaf length) and the transition matrix between them."""
    k = m.depth
    states = list(itertools.product(range(m.alphabet_size), repeat=k))
    index = {s: i for i, s in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    for s in states:
        probs = theta[m.leaf_for(s)]
        for a, p in enumerate(probs):
            P[index[s], index[((a,) + s)[:k]]] += p
    return states, P


def entropy_rate(m: ContextTreeModel, theta: Mapping[Context, Sequence[float]], alphabet: Alphabet | int | None = None) -> float:
    """Entropy rate in bits/symbol of the stationary source defined by (m, theta)."""
    if alphabet is not None:
        size = alphabet.size if isinstance(alphabet, Alphabet) else alphabet
        if size != m.alphabet_size:
            raise ValueError("alphabet does not match model")
    if m.depth == 0:
        return entropy_bits(theta[()])
    states, P = context_chain(m, theta)
    pi = stationary_distribution(P)
    return math.fsum(float(pi[i]) * entropy_bits(theta[m.leaf_for(s)]) for i, s in enumerate(states))


def context_key(s: Context) -> str:
    """Text key used for contexts in JSON files: symbols joined by commas, root is ''."""
    return ",".join(str(a) for a in s)


def parse_context_key(key: str) -> Context:
    key = key.strip()
    return tuple(int(a) for a in key.split(",")) if key else ()

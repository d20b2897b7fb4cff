"""Sequential Bayes coding probability for a source whose context tree model
switches at unknown times.

One superposed context tree is kept per candidate last change point tau,
together with the posterior ``v`` over tau.  Each step costs O(t * d).

Two engines share this logic:

``ReferenceSwitcher``
    a list of :class:`~ctswitch.predictor.SuperposedTree` objects with lazily
    allocated nodes; works for any alphabet and depth.
``DenseSwitcher``
    compiled loops over dense per-tree arrays; used whenever a full tree of
    the configured depth fits in a small array.

Both produce bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .ctm import Alphabet, DirichletPrior, NodeHyperPrior
from .predictor import SuperposedTree

# per-tree float budget under which the dense engine is chosen automatically
DENSE_TREE_LIMIT = 1024


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SwitchConfig:
    alphabet_size: int = 2
    depth: int = 2
    alpha: float = 0.01
    g: float | NodeHyperPrior = 0.5
    beta: float | DirichletPrior = 0.5
    pad_symbol: int = 0
    prune_epsilon: float = 0.0

    def __post_init__(self) -> None:
        try:
            Alphabet(self.alphabet_size)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.depth < 0 or int(self.depth) != self.depth:
            raise ConfigError(f"depth must be a non-negative integer, got {self.depth!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if not 0 <= self.pad_symbol < self.alphabet_size:
            raise ConfigError(f"pad symbol {self.pad_symbol} outside alphabet")
        if not 0.0 <= self.prune_epsilon < 1.0:
            raise ConfigError(f"prune epsilon must lie in [0, 1), got {self.prune_epsilon!r}")
        try:
            g, beta = self.hyper_g, self.dirichlet
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if g.max_depth != self.depth:
            raise ConfigError("node hyper-prior depth does not match config depth")
        if beta.alphabet_size != self.alphabet_size:
            raise ConfigError("Dirichlet prior alphabet does not match config")

    @property
    def hyper_g(self) -> NodeHyperPrior:
        if isinstance(self.g, NodeHyperPrior):
            return self.g
        return NodeHyperPrior(self.depth, float(self.g))

    @property
    def dirichlet(self) -> DirichletPrior:
        if isinstance(self.beta, DirichletPrior):
            return self.beta
        return DirichletPrior(self.alphabet_size, float(self.beta))

    @property
    def dense_nodes(self) -> int:
        A, d = self.alphabet_size, self.depth
        return (A ** (d + 1) - 1) // (A - 1)

    @property
    def exact(self) -> bool:
        return self.prune_epsilon == 0.0


class Switcher:
    """Common state handling; engines supply the per-tree computations."""

    engine = "abstract"

    def __init__(self, config: SwitchConfig):
        self.config = config
        self.t = 0
        self.history: list[int] = []
        self._probs_cache: np.ndarray | None = None
        self.pruned_candidates = 0

    # engine hooks -------------------------------------------------------
    def _n_trees(self) -> int:
        raise NotImplementedError

    def _root_probs(self) -> np.ndarray:
        """q~_root of every symbol for every tree, shaped (alphabet, trees)."""
        raise NotImplementedError

    def _absorb(self, x: int) -> np.ndarray:
        """Add x to every tree; returns each tree's q~_root(x) before the update."""
        raise NotImplementedError

    def _append_tree(self, start: int, weight: float) -> None:
        raise NotImplementedError

    def _keep(self, mask: np.ndarray) -> None:
        raise NotImplementedError

    @property
    def v(self) -> np.ndarray:
        """Posterior over candidate last change points, aligned with :attr:`starts`."""
        raise NotImplementedError

    @property
    def starts(self) -> np.ndarray:
        """1-based start time tau of every live candidate, ascending."""
        raise NotImplementedError

    # public API ---------------------------------------------------------
    def _ensure_started(self) -> None:
        if self.t == 0 and self._n_trees() == 0:
            self._append_tree(1, 1.0)

    def predict(self) -> np.ndarray:
        """Predictive distribution of the next symbol."""
        self._ensure_started()
        if self._probs_cache is None:
            self._probs_cache = self._root_probs()
        out = np.empty(self.config.alphabet_size)
        _kernels.mix(self.v, self._probs_cache, self._n_trees(), out)
        return out

    def advance(self, x: int) -> float:
        """Consume symbol ``x``; returns its coding probability p~(x | past)."""
        x = int(x)
        if not 0 <= x < self.config.alphabet_size:
            raise ValueError(f"symbol {x} outside alphabet of size {self.config.alphabet_size}")
        self._ensure_started()
        self._probs_cache = None
        n = self._n_trees()
        q = self._absorb(x)
        v = self.v
        p = _kernels.weighted_sum(v, q, n)
        alpha = self.config.alpha
        _kernels.reweight(v, q, n, alpha, p)
        self.history.append(x)
        self.t += 1
        if alpha > 0.0:
            self._append_tree(self.t + 1, alpha)
        if self.config.prune_epsilon > 0.0:
            self._prune()
        return p

    def _prune(self) -> None:
        v = self.v
        keep = v >= self.config.prune_epsilon
        keep[int(np.argmax(v))] = True
        dropped = int(v.size - keep.sum())
        if dropped:
            self.pruned_candidates += dropped
            self._keep(keep)
            v = self.v
            total = _kernels.ordered_sum(v, v.size)
            v /= total

    def last_changepoint_estimate(self) -> int:
        """argmax over tau of v(tau | past) for the time about to be predicted.

        Ties go to the smallest tau.  Before any symbol the only candidate
        is tau = 1.
        """
        if self._n_trees() == 0:
            return 1
        return int(self.starts[int(np.argmax(self.v))])

    def run(self, xs: Sequence[int]) -> np.ndarray:
        return np.array([self.advance(x) for x in xs])


class ReferenceSwitcher(Switcher):
    engine = "reference"

    def __init__(self, config: SwitchConfig):
        super().__init__(config)
        self._trees: list[SuperposedTree] = []
        self._v = np.empty(0)
        self._g = config.hyper_g
        self._beta = config.dirichlet

    def _n_trees(self) -> int:
        return len(self._trees)

    @property
    def v(self) -> np.ndarray:
        return self._v

    @property
    def starts(self) -> np.ndarray:
        return np.array([tree.start_time for tree in self._trees], dtype=np.int64)

    @property
    def trees(self) -> list[SuperposedTree]:
        return self._trees

    def _context(self, tree: SuperposedTree) -> list[int]:
        lo = max(tree.start_time - 1, self.t - self.config.depth)
        return self.history[lo:self.t]

    def _root_probs(self) -> np.ndarray:
        probs = [tree.weighted_predict(self._context(tree)) for tree in self._trees]
        return np.array(probs).reshape(len(self._trees), self.config.alphabet_size).T.copy()

    def _absorb(self, x: int) -> np.ndarray:
        return np.array([tree.absorb_symbol(self._context(tree), x) for tree in self._trees])

    def _append_tree(self, start: int, weight: float) -> None:
        c = self.config
        self._trees.append(SuperposedTree(c.alphabet_size, c.depth, self._g, self._beta, c.pad_symbol, start))
        self._v = np.append(self._v, weight)

    def _keep(self, mask: np.ndarray) -> None:
        self._trees = [tree for tree, k in zip(self._trees, mask) if k]
        self._v = self._v[mask]


class DenseSwitcher(Switcher):
    engine = "dense"

    def __init__(self, config: SwitchConfig, capacity: int = 64):
        super().__init__(config)
        A, d = config.alphabet_size, config.depth
        self._nodes: list[tuple[int, ...]] = [()]
        for k in range(d):
            self._nodes.extend(s + (a,) for s in self._nodes[-(A**k):] for a in range(A))
        g, beta = config.hyper_g, config.dirichlet
        self._g0 = np.array([g(s) for s in self._nodes])
        self._beta = np.array([beta(s) for s in self._nodes], dtype=np.float64).reshape(len(self._nodes), A)
        self._counts = np.zeros((len(self._nodes), A, capacity))
        self._gpost = np.zeros((len(self._nodes), capacity))
        self._levels = np.zeros((d + 1, A, capacity))
        self._den = np.zeros(capacity)
        self._starts0 = np.zeros(capacity, dtype=np.int64)
        self._vbuf = np.zeros(capacity)
        self._hist = np.zeros(capacity, dtype=np.int64)
        self._n = 0
        self._levels_fresh = False

    def node_index(self, s: tuple[int, ...]) -> int:
        n = 0
        for a in s:
            n = n * self.config.alphabet_size + a + 1
        return n

    def _n_trees(self) -> int:
        return self._n

    @property
    def v(self) -> np.ndarray:
        return self._vbuf[: self._n]

    @property
    def starts(self) -> np.ndarray:
        return self._starts0[: self._n] + 1

    def _grow(self, need: int) -> None:
        cap = self._vbuf.shape[0]
        if need <= cap:
            return
        new = max(need, 2 * cap)

        def enlarge(arr):
            out = np.zeros(arr.shape[:-1] + (new,), dtype=arr.dtype)
            out[..., :cap] = arr
            return out

        self._counts = enlarge(self._counts)
        self._gpost = enlarge(self._gpost)
        self._levels = enlarge(self._levels)
        self._den = enlarge(self._den)
        self._starts0 = enlarge(self._starts0)
        self._vbuf = enlarge(self._vbuf)

    def _compute_levels(self) -> None:
        if not self._levels_fresh:
            c = self.config
            _kernels.level_probs(
                self._counts, self._gpost, self._beta, self._starts0, self._n,
                self._hist, self.t, c.pad_symbol, c.depth, self._levels, self._den,
            )
            self._levels_fresh = True

    def _root_probs(self) -> np.ndarray:
        self._compute_levels()
        return self._levels[0]

    def _absorb(self, x: int) -> np.ndarray:
        c = self.config
        self._compute_levels()
        q = self._levels[0, x, : self._n].copy()
        _kernels.absorb(self._counts, self._gpost, self._starts0, self._n, self._hist, self.t, c.pad_symbol, c.depth, x, self._levels)
        self._levels_fresh = False
        if self.t >= self._hist.shape[0]:
            hist = np.zeros(2 * self._hist.shape[0], dtype=np.int64)
            hist[: self.t] = self._hist[: self.t]
            self._hist = hist
        self._hist[self.t] = x
        return q

    def _append_tree(self, start: int, weight: float) -> None:
        self._grow(self._n + 1)
        i = self._n
        self._counts[..., i] = 0.0
        self._gpost[:, i] = self._g0
        self._starts0[i] = start - 1
        self._vbuf[i] = weight
        self._n += 1
        self._levels_fresh = False

    def _keep(self, mask: np.ndarray) -> None:
        n = int(mask.sum())
        idx = np.flatnonzero(mask)
        self._counts[..., :n] = self._counts[..., idx]
        self._gpost[:, :n] = self._gpost[:, idx]
        self._starts0[:n] = self._starts0[idx]
        self._vbuf[:n] = self._vbuf[idx]
        self._n = n
        self._levels_fresh = False

    def tree_counts(self, i: int) -> dict[tuple[int, ...], np.ndarray]:
        """Non-zero node counts of tree ``i``, keyed by context."""
        return {s: self._counts[k, :, i].copy() for k, s in enumerate(self._nodes) if self._counts[k, :, i].any()}

    def tree_posterior_g(self, i: int) -> dict[tuple[int, ...], float]:
        return {s: float(self._gpost[k, i]) for k, s in enumerate(self._nodes)}


def make_switcher(config: SwitchConfig, engine: str = "auto") -> Switcher:
    if engine == "auto":
        engine = "dense" if config.dense_nodes * (config.alphabet_size + 1) <= DENSE_TREE_LIMIT else "reference"
    if engine == "dense":
        return DenseSwitcher(config)
    if engine == "reference":
        return ReferenceSwitcher(config)
    raise ConfigError(f"unknown engine {engine!r}")


# functional surface ------------------------------------------------------

def init(config: SwitchConfig, engine: str = "auto") -> Switcher:
    return make_switcher(config, engine)


def predict(state: Switcher) -> np.ndarray:
    return state.predict()


def advance(state: Switcher, x: int) -> tuple[float, Switcher]:
    p = state.advance(x)
    return p, state


def last_changepoint_estimate(state: Switcher) -> int:
    return state.last_changepoint_estimate()


def code_length_bits(config: SwitchConfig, xs: Sequence[int], engine: str = "auto") -> float:
    """Ideal code length sum of -log2 p~(x_t | x^{t-1})."""
    sw = make_switcher(config, engine)
    return math.fsum(-math.log2(sw.advance(x)) for x in xs)


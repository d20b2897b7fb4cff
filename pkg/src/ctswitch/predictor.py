"""Bayes predictor for a single segment: a superposed context tree with
Dirichlet estimators at every node and recursive model weighting.

The tree for a segment starting at ``start_time`` only ever sees that
segment's symbols.  Contexts shorter than the tree depth are left-padded
with ``pad_symbol``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .ctm import Context, DirichletPrior, NodeHyperPrior, padded_context


@dataclass
class StatNode:
    context: Context
    counts: list[int]
    posterior_g: float
    children: dict[int, StatNode] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts)


def kt_prob(node: StatNode, beta: Sequence[float], a: int) -> float:
    """Dirichlet predictive probability of ``a`` given the node's counts."""
    den = 0.0
    for i in range(len(beta)):
        den += beta[i] + node.counts[i]
    return (beta[a] + node.counts[a]) / den


class SuperposedTree:
    def __init__(
        self,
        alphabet_size: int,
        depth: int,
        g: NodeHyperPrior,
        beta: DirichletPrior,
        pad_symbol: int = 0,
        start_time: int = 1,
    ):
        if g.max_depth != depth:
            raise ValueError(f"hyper-prior depth {g.max_depth} does not match tree depth {depth}")
        self.alphabet_size = alphabet_size
        self.depth = depth
        self.g = g
        self.beta = beta
        self.pad_symbol = pad_symbol
        self.start_time = start_time
        self.root = self._new_node(())
        self._beta_cache: dict[Context, tuple[float, ...]] = {}

    def _new_node(self, s: Context) -> StatNode:
        return StatNode(s, [0] * self.alphabet_size, self.g(s))

    def _beta(self, s: Context) -> tuple[float, ...]:
        b = self._beta_cache.get(s)
        if b is None:
            b = self._beta_cache[s] = self.beta(s)
        return b

    def _path(self, context: Sequence[int], create: bool) -> list[StatNode | Context]:
        """Nodes from root to depth d along the padded context.

        Missing nodes are returned as their context tuple unless ``create``.
        """
        ctx = padded_context(context, self.depth, self.pad_symbol)
        path: list[StatNode | Context] = [self.root]
        node: StatNode | None = self.root
        for k in range(self.depth):
            s = ctx[: k + 1]
            child = node.children.get(ctx[k]) if node is not None else None
            if child is None and create:
                child = node.children[ctx[k]] = self._new_node(s)
            path.append(child if child is not None else s)
            node = child
        return path

    def _weighted(self, path, a: int) -> list[float]:
        # q~ at every depth along the path for symbol a, index 0 is the root
        qt = [0.0] * len(path)
        for k in range(len(path) - 1, -1, -1):
            item = path[k]
            if isinstance(item, StatNode):
                s, counts, g = item.context, item.counts, item.posterior_g
            else:
                s, counts, g = item, None, self.g(item)
            beta = self._beta(s)
            den = 0.0
            for i in range(self.alphabet_size):
                den += beta[i] + (counts[i] if counts is not None else 0)
            q = (beta[a] + (counts[a] if counts is not None else 0)) / den
            if k == len(path) - 1:
                qt[k] = q
            else:
                qt[k] = (1.0 - g) * q + g * qt[k + 1]
        return qt

    def weighted_predict(self, context: Sequence[int]) -> list[float]:
        """Predictive distribution q~_root(.|context) over the alphabet.

        ``context`` is the within-segment history in time order; only its
        last ``depth`` symbols are read.
        """
        path = self._path(context, create=False)
        A = self.alphabet_size
        below: list[float] = []
        for k in range(len(path) - 1, -1, -1):
            # same arithmetic as _weighted, one level at a time for every symbol
            item = path[k]
            if isinstance(item, StatNode):
                s, counts, g = item.context, item.counts, item.posterior_g
            else:
                s, counts, g = item, [0] * A, self.g(item)
            beta = self._beta(s)
            den = 0.0
            for i in range(A):
                den += beta[i] + counts[i]
            q = [(beta[a] + counts[a]) / den for a in range(A)]
            below = q if k == len(path) - 1 else [(1.0 - g) * q[a] + g * below[a] for a in range(A)]
        return below

    def absorb_symbol(self, context: Sequence[int], x: int) -> float:
        """Update counts and posterior g along the path; returns q~_root(x|context)."""
        path = self._path(context, create=True)
        qt = self._weighted(path, x)
        for k, node in enumerate(path):
            if k < self.depth:
                node.posterior_g = node.posterior_g * qt[k + 1] / qt[k]
            node.counts[x] += 1
        return qt[0]

    def node_count(self) -> int:
        n, stack = 0, [self.root]
        while stack:
            node = stack.pop()
            n += 1
            stack.extend(node.children.values())
        return n

    def nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.children.values())


def weighted_predict(tree: SuperposedTree, context: Sequence[int]) -> list[float]:
    return tree.weighted_predict(context)


def absorb_symbol(tree: SuperposedTree, context: Sequence[int], x: int) -> SuperposedTree:
    tree.absorb_symbol(context, x)
    return tree

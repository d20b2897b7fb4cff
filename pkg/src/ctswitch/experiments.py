"""Experiment harness: redundancy and change-point tracking on simulated
piecewise sources, oracle equivalence checks and a runtime benchmark.

Trial ``i`` always uses the sequence ``generate(spec, seed + i)`` and the same
sequence is shared by every alpha.  Per-trial results are reduced in trial
order, so output does not depend on the number of worker processes.
"""

from __future__ import annotations

import csv
import itertools
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ctm import DirichletPrior, NodeHyperPrior
from .oracle import exact_step_probs
from .simgen import SegmentedSourceSpec, generate, load_spec, per_symbol_entropy
from .switcher import SwitchConfig, make_switcher

DEFAULT_ALPHAS = (0.1, 0.01, 0.001)


@dataclass(frozen=True)
class ExperimentConfig:
    spec_path: str | None = None
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    trials: int = 1000
    seed: int = 0
    g: float = 0.5
    beta: float = 0.5
    depth: int = 2
    threads: int = 1
    out: str | None = None

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.alphas or any(not 0.0 <= a <= 1.0 for a in self.alphas):
            raise ValueError("alpha values must lie in [0, 1]")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def spec(self) -> SegmentedSourceSpec:
        return load_spec(self.spec_path)

    def switch_config(self, spec: SegmentedSourceSpec, alpha: float) -> SwitchConfig:
        return SwitchConfig(spec.alphabet_size, self.depth, alpha, self.g, self.beta, spec.pad_symbol)


def trace(config: SwitchConfig, xs: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Per-step code length -log2 p~(x_t|x^{t-1}) and tau estimate before x_t."""
    sw = make_switcher(config)
    bits = np.empty(len(xs))
    tau = np.empty(len(xs), dtype=np.int64)
    for t, x in enumerate(xs):
        tau[t] = sw.last_changepoint_estimate()
        bits[t] = -math.log2(sw.advance(x))
    return bits, tau


def _run_trial(args) -> list[tuple[np.ndarray, np.ndarray]]:
    cfg, spec, trial = args
    xs = generate(spec, cfg.seed + trial)
    return [trace(cfg.switch_config(spec, a), xs) for a in cfg.alphas]


@dataclass
class TrialAverages:
    alphas: tuple[float, ...]
    entropy: np.ndarray
    mean_bits: dict[float, np.ndarray] = field(default_factory=dict)
    mean_tau: dict[float, np.ndarray] = field(default_factory=dict)

    def redundancy(self, alpha: float) -> np.ndarray:
        return self.mean_bits[alpha] - self.entropy


def run_trials(cfg: ExperimentConfig) -> TrialAverages:
    spec = cfg.spec()
    jobs = [(cfg, spec, i) for i in range(cfg.trials)]
    n = spec.length
    bit_sums = {a: np.zeros(n) for a in cfg.alphas}
    tau_sums = {a: np.zeros(n) for a in cfg.alphas}

    def accumulate(results: Iterable[list[tuple[np.ndarray, np.ndarray]]]) -> None:
        for per_alpha in results:
            for a, (bits, tau) in zip(cfg.alphas, per_alpha):
                bit_sums[a] += bits
                tau_sums[a] += tau

    if cfg.threads == 1:
        accumulate(map(_run_trial, jobs))
    else:
        with ProcessPoolExecutor(cfg.threads) as pool:
            accumulate(pool.map(_run_trial, jobs, chunksize=max(1, cfg.trials // (4 * cfg.threads))))
    out = TrialAverages(cfg.alphas, per_symbol_entropy(spec))
    for a in cfg.alphas:
        out.mean_bits[a] = bit_sums[a] / cfg.trials
        out.mean_tau[a] = tau_sums[a] / cfg.trials
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def experiment_a_rows(avg: TrialAverages) -> list[tuple[int, float, float]]:
    return [(t + 1, a, float(r)) for a in avg.alphas for t, r in enumerate(avg.redundancy(a))]


def experiment_b_rows(avg: TrialAverages) -> list[tuple[int, float, float]]:
    return [(t + 1, a, float(v)) for a in avg.alphas for t, v in enumerate(avg.mean_tau[a])]


def write_csv(path: str | Path | None, header: Sequence[str], rows: Iterable[Sequence], stream=None) -> None:
    def dump(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])

    if path is None:
        dump(stream)
    else:
        with open(path, "w", newline="") as fh:
            dump(fh)


def run_experiment_a(cfg: ExperimentConfig, stream=None) -> list[tuple[int, float, float]]:
    rows = experiment_a_rows(run_trials(cfg))
    if cfg.out is not None or stream is not None:
        write_csv(cfg.out, ("t", "alpha", "avg_redundancy_bits"), rows, stream)
    return rows


def run_experiment_b(cfg: ExperimentConfig, stream=None) -> list[tuple[int, float, float]]:
    rows = experiment_b_rows(run_trials(cfg))
    if cfg.out is not None or stream is not None:
        write_csv(cfg.out, ("t", "alpha", "avg_tau_hat"), rows, stream)
    return rows


# oracle equivalence --------------------------------------------------------

@dataclass
class OracleReport:
    instances: int
    n: int
    max_rel_dev: float
    max_posterior_error: float
    tolerance: float
    worst: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_dev <= self.tolerance

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} oracle-check: {self.instances} instances, n={self.n}, "
            f"max relative deviation {self.max_rel_dev:.3e} (tolerance {self.tolerance:.0e}), "
            f"max |sum v - 1| {self.max_posterior_error:.3e}"
        )


def random_instance(rng: random.Random, n: int, alphabet_size: int = 2, depths=(0, 1, 2), alpha: float | None = None):
    """Random (sequence, config) with per-node random g and beta."""
    d = rng.choice(depths)
    A = alphabet_size
    g = NodeHyperPrior(
        d, rng.random(), {s: rng.random() for k in range(d) for s in itertools.product(range(A), repeat=k)}
    )
    beta = DirichletPrior(
        A,
        rng.uniform(0.05, 5.0),
        {s: tuple(rng.uniform(0.05, 5.0) for _ in range(A)) for k in range(d + 1) for s in itertools.product(range(A), repeat=k)},
    )
    a = rng.random() if alpha is None else alpha
    config = SwitchConfig(A, d, a, g, beta, pad_symbol=rng.randrange(A))
    xs = [rng.randrange(A) for _ in range(n)]
    return xs, config


def run_oracle_check(
    n_max: int = 10,
    instances: int = 50,
    seed: int = 0,
    *,
    alpha: float | None = None,
    perturb: float = 0.0,
    engine: str = "auto",
    tolerance: float = 1e-9,
) -> OracleReport:
    """Compare every per-step switcher probability with the brute-force oracle.

    ``perturb`` scales the first posterior weight by ``1 + perturb`` after each
    step; it exists to show the check can fail.
    """
    if not 1 <= n_max <= 12:
        raise ValueError("n_max must lie in [1, 12]")
    rng = random.Random(seed)
    worst = 0.0
    worst_case: dict = {}
    post_err = 0.0
    for k in range(instances):
        xs, config = random_instance(rng, n_max, alpha=alpha)
        exact = exact_step_probs(xs, config.alpha, config.hyper_g, config.dirichlet, config.depth, config.pad_symbol)
        sw = make_switcher(config, engine)
        for t, x in enumerate(xs):
            p = sw.advance(x)
            dev = abs(p / exact[t] - 1.0)
            if dev > worst:
                worst = dev
                worst_case = {"instance": k, "t": t + 1, "switcher": p, "oracle": exact[t]}
            post_err = max(post_err, abs(math.fsum(sw.v) - 1.0))
            if perturb:
                sw.v[0] *= 1.0 + perturb
    return OracleReport(instances, n_max, worst, post_err, tolerance, worst_case)


# benchmark -------------------------------------------------------------------

def bench_sequence(n: int, alphabet_size: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed))
    return rng.integers(0, alphabet_size, size=n)


def run_bench(sizes: Sequence[int], config: SwitchConfig, seed: int = 0, repeats: int = 1) -> list[tuple[int, float, str]]:
    """Wall-clock seconds to run the switcher over i.i.d. uniform inputs (best of ``repeats``)."""
    mode = "exact" if config.exact else f"non-exact(pruned eps={config.prune_epsilon:g})"
    make_switcher(config).run(bench_sequence(4, config.alphabet_size, seed))  # warm the compiled kernels
    rows = []
    for n in sizes:
        xs = bench_sequence(n, config.alphabet_size, seed)
        best = math.inf
        for _ in range(repeats):
            sw = make_switcher(config)
            t0 = time.perf_counter()
            for x in xs:
                sw.advance(x)
            best = min(best, time.perf_counter() - t0)
        rows.append((n, best, mode))
    return rows


def step_times(n: int, config: SwitchConfig, seed: int = 0, repeats: int = 1) -> np.ndarray:
    """Seconds spent in each advance call, the minimum over ``repeats`` runs."""
    xs = bench_sequence(n, config.alphabet_size, seed)
    make_switcher(config).run(xs[:4])
    best = np.full(n, np.inf)
    clock = time.perf_counter
    for _ in range(repeats):
        sw = make_switcher(config)
        for t, x in enumerate(xs):
            t0 = clock()
            sw.advance(x)
            best[t] = min(best[t], clock() - t0)
    return best


def step_cost_fit(n: int, config: SwitchConfig, bins: int = 20, repeats: int = 5, seed: int = 0) -> tuple[float, float, float]:
    """Linear fit of per-step cost against t on binned medians; returns (a, b, R^2)."""
    st = step_times(n - n % bins, config, seed, repeats)
    med = np.median(st.reshape(bins, -1), axis=1)
    centers = (np.arange(bins) + 0.5) * (st.size / bins)
    return linear_fit_r2(centers, med)


def linear_fit_r2(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line y = a + b x; returns (a, b, R^2)."""
    b, a = np.polyfit(x, y, 1)
    resid = y - (a + b * x)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return float(a), float(b), 1.0 - float((resid**2).sum()) / ss_tot

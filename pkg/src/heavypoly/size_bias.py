"""Size-biased disorder and the entropy criterion for strong disorder.

Under the size-biased law (density W_N against P) the environment looks like
the base field except along one independent walk path S, where the values
are redrawn from the tilted law. ``h_beta`` is the per-step drift of the
single-path lower bound for log W_N under that law; when it is positive,
W_N blows up along the size-biased measure, which is the strong-disorder
signature.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import _kernels
from ._parallel import map_ordered
from .environment import EnvironmentLaw
from .errors import ContractViolation
from .partition import PolymerConfig, WTrajectory, exact_W, truncated_kernel
from .walk_laws import EntropyResult, IncrementLaw


@functools.lru_cache(maxsize=32)
def _entropy(law: IncrementLaw) -> EntropyResult:
    return law.entropy(tol=1e-4)


def h_beta(law: IncrementLaw, env: EnvironmentLaw, beta: float) -> float:
    """excess(beta) - H(K); ``-inf`` when the walk entropy diverges."""
    ent = _entropy(law)
    if not ent.finite:
        return -math.inf
    return env.excess(beta) - ent.value


def lln_slope_check(law: IncrementLaw, env: EnvironmentLaw, beta: float, n_steps: int,
                    replicas: int, rng: Optional[np.random.Generator] = None):
    """Empirical mean and SE of log K(X) + beta * w~ - lambda(beta).

    X is drawn by inverse transform on the full law; draws beyond the exact
    integer range use the relaxed continuous shape for log K.
    """
    rng = np.random.default_rng() if rng is None else rng
    total = int(n_steps) * int(replicas)
    if total < 2:
        raise ValueError("need at least two terms")
    lam = env.lam(beta)
    acc = 0.0
    acc2 = 0.0
    chunk = 1 << 18
    left = total
    while left > 0:
        m = min(chunk, left)
        terms = law.sample_log_pmf(rng, m) + beta * env.tilted_sample(beta, rng, m) - lam
        acc += math.fsum(terms)
        acc2 += math.fsum(terms * terms)
        left -= m
    mean = acc / total
    var = max(acc2 / total - mean * mean, 0.0) * total / (total - 1)
    return mean, math.sqrt(var / total)


@dataclass(frozen=True)
class SizeBiasRun:
    config: PolymerConfig
    path: np.ndarray
    jumps: np.ndarray
    tilted: np.ndarray
    W_hat: WTrajectory

    @property
    def path_bound(self) -> float:
        """sum_k log K_M(X_k) + beta * w~_k - lambda(beta)."""
        k, _ = truncated_kernel(self.config.law, self.config.M)
        lam = self.config.env.lam(self.config.beta)
        with np.errstate(divide="ignore"):
            logk = np.log(k[self.jumps + 2 * self.config.M])
        return float(np.sum(logk) + self.config.beta * np.sum(self.tilted) - lam * self.config.N)


def wrap(z, M: int):
    """Map integers onto the ring labels -M..M."""
    return (np.asarray(z) + M) % (2 * M + 1) - M


def size_biased_run(config: PolymerConfig, replica: int) -> SizeBiasRun:
    """One draw of (S, base field, tilted values) and W_N on the composite field."""
    key = _kernels.mix64(config.seed, replica, 0x5B)
    rng = np.random.default_rng(key)
    k, _ = truncated_kernel(config.law, config.M)
    span = np.arange(-2 * config.M, 2 * config.M + 1)
    jumps = rng.choice(span, size=config.N, p=k)
    path = wrap(np.cumsum(jumps), config.M)
    tilted = np.asarray(config.env.tilted_sample(config.beta, rng, config.N), dtype=np.float64)
    base = config.field(key)
    composite = base.with_path_overlay(path.tolist(), tilted.tolist())
    return SizeBiasRun(config, path, jumps, tilted, exact_W(config, composite))


def _checked_log_w(config: PolymerConfig, replica: int) -> float:
    run = size_biased_run(config, replica)
    log_w = float(run.W_hat.log_w[-1])
    bound = run.path_bound
    if log_w < bound - 1e-9 * max(1.0, abs(bound)):
        raise ContractViolation(f"single-path bound fails: log W = {log_w} < {bound}")
    return log_w


def sized_biased_W(config: PolymerConfig, replicas: int, workers: int = 1) -> np.ndarray:
    """W_N samples under the size-biased law; the single-path bound is checked on each."""
    if config.beta == 0.0:
        return np.ones(replicas)
    job = functools.partial(_checked_log_w, config)
    return np.exp(np.array(map_ordered(job, range(replicas), workers)))


size_biased_W = sized_biased_W


@dataclass(frozen=True)
class DetectorRow:
    N: int
    L: float
    fraction: float
    stderr: float


@dataclass(frozen=True)
class DetectorResult:
    rows: List[DetectorRow]
    trend: Dict[float, float]
    pooled_se: Dict[float, float]
    classification: Dict[float, str]


def birkner_detector(config_family: Callable[[int], PolymerConfig],
                     N_grid: Sequence[int] = (8, 16, 32, 64),
                     L: Sequence[float] = (2.0, 10.0), replicas: int = 2000,
                     workers: int = 1) -> DetectorResult:
    """Fraction of size-biased W_N at or above each threshold, per horizon.

    The trend compares the largest horizon with the smallest; an increase of
    at least three pooled standard errors is labelled ``strong``, anything
    else ``inconclusive``.
    """
    grid = list(N_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("N_grid must be increasing")
    levels = [float(x) for x in np.atleast_1d(L)]
    if any(x <= 0 for x in levels):
        raise ValueError("thresholds must be positive")
    rows = []
    table: Dict[float, Dict[int, DetectorRow]] = {x: {} for x in levels}
    for n in grid:
        w = sized_biased_W(config_family(n), replicas, workers)
        for x in levels:
            f = float(np.mean(w >= x))
            row = DetectorRow(n, x, f, math.sqrt(f * (1.0 - f) / replicas))
            rows.append(row)
            table[x][n] = row
    trend, pooled, label = {}, {}, {}
    for x in levels:
        first, last = table[x][grid[0]], table[x][grid[-1]]
        trend[x] = last.fraction - first.fraction
        pooled[x] = math.hypot(first.stderr, last.stderr)
        strong = pooled[x] > 0 and trend[x] >= 3.0 * pooled[x]
        label[x] = "strong" if strong else "inconclusive"
    return DetectorResult(rows, trend, pooled, label)

"""Exact partition functions on a periodic window, plus Monte Carlo estimators.

The walk lives on the ring of ``2M + 1`` sites labelled ``-M..M``. Jumps are
drawn from the kernel truncated to ``|j| <= 2M`` and renormalised
(``K_M``), then wrapped. Each row of the transfer matrix is a probability
vector, so ``E W_N = 1`` holds exactly for the truncated model; the truncated
mass ``2 T(2M + 1)`` is reported as ``mass_loss``.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import _kernels
from ._parallel import map_ordered
from .environment import EnvironmentLaw
from .errors import ContractViolation
from .lattice_field import LatticeField
from .walk_laws import IncrementLaw


@dataclass(frozen=True)
class PolymerConfig:
    beta: float
    N: int
    M: int
    law: IncrementLaw
    env: EnvironmentLaw
    seed: int = 0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.M < 1:
            raise ValueError("M must be >= 1")

    @property
    def width(self) -> int:
        return 2 * self.M + 1

    @property
    def positions(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    def field(self, seed: Optional[int] = None) -> LatticeField:
        return LatticeField(self.seed if seed is None else seed, self.env)


@dataclass(frozen=True)
class WTrajectory:
    w: np.ndarray
    log_w: np.ndarray
    logZ: np.ndarray
    mass_loss: float

    @property
    def final(self) -> float:
        return float(self.w[-1])


@functools.lru_cache(maxsize=64)
def truncated_kernel(law: IncrementLaw, M: int) -> Tuple[np.ndarray, float]:
    """(K_M(j) for j = -2M..2M, truncated mass 2 T(2M + 1))."""
    jumps = np.arange(-2 * M, 2 * M + 1)
    k = law.pmf(jumps)
    lost = 2.0 * law.tail(2 * M + 1)
    k = k / k.sum()
    k.setflags(write=False)
    return k, float(lost)


@functools.lru_cache(maxsize=64)
def ring_kernel(law: IncrementLaw, M: int) -> np.ndarray:
    """c[r] = P[jump = r mod (2M + 1)] for r = 0..2M."""
    k, _ = truncated_kernel(law, M)
    width = 2 * M + 1
    c = np.zeros(width)
    np.add.at(c, np.arange(-2 * M, 2 * M + 1) % width, k)
    c.setflags(write=False)
    return c


@functools.lru_cache(maxsize=16)
def transfer_matrix(law: IncrementLaw, M: int) -> np.ndarray:
    """T[i, j] = P[move from site j to site i] on the ring (circulant)."""
    c = ring_kernel(law, M)
    width = c.size
    idx = (np.arange(width)[:, None] - np.arange(width)[None, :]) % width
    t = np.ascontiguousarray(c[idx])
    t.setflags(write=False)
    return t


def log_weights(config: PolymerConfig, fld: LatticeField) -> np.ndarray:
    """beta * omega_{n,z} - lambda(beta) on times 1..N and the window."""
    omega = fld.grid(np.arange(1, config.N + 1), config.positions)
    return config.beta * omega - config.env.lam(config.beta)


def exact_W(config: PolymerConfig, fld: Optional[LatticeField] = None) -> WTrajectory:
    """W_n for n = 1..N by the forward recursion, starting from S_0 = 0."""
    fld = config.field() if fld is None else fld
    if fld.env != config.env:
        raise ValueError("field environment differs from the configuration")
    _, lost = truncated_kernel(config.law, config.M)
    lam = config.env.lam(config.beta)
    steps = np.arange(1, config.N + 1)
    if config.beta == 0.0:
        log_w = np.zeros(config.N)
    else:
        lw = log_weights(config, fld)
        shift = lw.max(axis=1)
        weights = np.exp(lw - shift[:, None])
        init = np.zeros(config.width)
        init[config.M] = 1.0
        log_tot, _, _ = _kernels.forward_dp(transfer_matrix(config.law, config.M), weights, init)
        log_w = log_tot + np.cumsum(shift)
    return WTrajectory(np.exp(log_w), log_w, log_w + steps * lam, lost)


def _replica_seed(seed: int, r: int) -> int:
    return _kernels.mix64(seed, r)


def _final_log_w(config: PolymerConfig, r: int) -> float:
    fld = config.field(_replica_seed(config.seed, r))
    return float(exact_W(config, fld).log_w[-1])


def replica_log_w(config: PolymerConfig, replicas: int, workers: int = 1) -> np.ndarray:
    """log W_N over independent fields keyed by (seed, replica index)."""
    if config.beta == 0.0:
        return np.zeros(replicas)
    job = functools.partial(_final_log_w, config)
    return np.array(map_ordered(job, range(replicas), workers))


def mean_W_mc(config: PolymerConfig, replicas: int, workers: int = 1) -> Tuple[float, float]:
    """Sample mean and standard error of W_N."""
    if replicas < 2:
        raise ValueError("need at least two replicas")
    w = np.exp(replica_log_w(config, replicas, workers))
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(replicas))


def free_energy_gap(config: PolymerConfig, replicas: int, workers: int = 1) -> Tuple[float, float]:
    """p_hat = mean(log Z_N) / N - lambda(beta), with its standard error."""
    if replicas < 2:
        raise ValueError("need at least two replicas")
    lw = replica_log_w(config, replicas, workers) / config.N
    return float(lw.mean()), float(lw.std(ddof=1) / math.sqrt(replicas))


def martingale_check(config: PolymerConfig, replicas: int = 8,
                     rng: Optional[np.random.Generator] = None) -> float:
    """max over prefixes of |E[W_{n+1} | G_n] - W_n|, next row fully enumerated."""
    env = config.env
    if not env.enumerable:
        raise ValueError("martingale_check needs a finitely supported environment")
    atoms = env.atoms
    if len(atoms) > 3 or config.M > 3 or config.N > 4:
        raise ValueError("martingale_check is limited to <= 3 atoms, M <= 3, N <= 4")
    if config.beta == 0.0:
        return 0.0
    rng = np.random.default_rng(config.seed) if rng is None else rng
    values = np.array([v for v, _ in atoms])
    probs = np.array([p for _, p in atoms])
    lam = env.lam(config.beta)
    trans = transfer_matrix(config.law, config.M)
    width = config.width
    # every configuration of one row, with its probability
    combos = np.array(list(itertools.product(range(len(atoms)), repeat=width)), dtype=np.int64)
    row_prob = np.prod(probs[combos], axis=1)
    row_w = np.exp(config.beta * values[combos] - lam)
    worst = 0.0
    for _ in range(replicas):
        fld = config.field(int(rng.integers(0, 2**63)))
        lw = log_weights(config, fld)
        a = np.zeros(width)
        a[config.M] = 1.0
        for n in range(config.N):
            pushed = trans @ a
            expected = float(row_prob @ (row_w @ pushed))
            worst = max(worst, abs(expected - a.sum()))
            a = pushed * np.exp(lw[n])
    if worst > 1e-10:
        raise ContractViolation(f"martingale discrepancy {worst:.3g} exceeds 1e-10")
    return worst


def exit_probability(law: IncrementLaw, M: int, N: int, M_outer: Optional[int] = None) -> float:
    """P[the unwrapped truncated walk leaves [-M, M] within N steps].

    The kernel is the one of window ``M_outer`` (default ``M``).
    """
    Mo = M if M_outer is None else M_outer
    k, _ = truncated_kernel(law, Mo)
    width = 2 * M + 1
    a = np.zeros(width)
    a[M] = 1.0
    for _ in range(N):
        a = np.convolve(a, k)[2 * Mo:2 * Mo + width]
    return float(max(0.0, 1.0 - a.sum()))


def window_change_bound(config: PolymerConfig, M_big: int) -> float:
    """Bound on |W_N(M) - W_N(M_big)| for disorder bounded above.

    Paths that stay in [-M, M] carry the same disorder in both windows and
    differ only through the kernel normalisation; the rest is controlled by
    the exit probabilities times the largest possible weight product.
    """
    if M_big < config.M:
        raise ValueError("M_big must be at least M")
    s = config.env.ess_sup
    if not math.isfinite(s):
        raise ValueError("needs an environment bounded above")
    n = config.N
    top = math.exp(n * (config.beta * s - config.env.lam(config.beta)))
    _, lost_small = truncated_kernel(config.law, config.M)
    _, lost_big = truncated_kernel(config.law, M_big)
    renorm = abs(((1.0 - lost_big) / (1.0 - lost_small)) ** n - 1.0)
    out_small = exit_probability(config.law, config.M, n)
    out_big = exit_probability(config.law, config.M, n, M_big)
    return top * (out_small + out_big + renorm)

"""Rectangle coarse-graining behind the lower bound on the free energy.

Space-time is cut into rectangles R_{i,j} of N times and 2N^2 sites. Inside
each, ``restricted_W`` is the normalised partition function of paths that
start at the rectangle's centre line, stay within distance N^2 and are back
on the centre line at step N - 1, conditioned on that event A_N. A rectangle
is eta-good when this value is at least eta; chaining good rectangles gives
the assembled lower bound.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize, signal

from . import _kernels
from .environment import EnvironmentLaw
from .errors import ContractViolation
from .lattice_field import LatticeField
from .walk_laws import IncrementLaw

_THREE_OVER_PI2 = 3.0 / math.pi**2


def half_width(N: int) -> int:
    """Largest allowed |S_k - S_0|, i.e. N^2 - 1."""
    return N * N - 1


@functools.lru_cache(maxsize=32)
def _window_kernel(law: IncrementLaw, N: int) -> np.ndarray:
    """K(j) for |j| <= 2(N^2 - 1), the jumps that stay inside the window."""
    h = half_width(N)
    k = law.pmf(np.arange(-2 * h, 2 * h + 1))
    k.setflags(write=False)
    return k


@functools.lru_cache(maxsize=16)
def _window_matrix(law: IncrementLaw, N: int) -> np.ndarray:
    h = half_width(N)
    k = _window_kernel(law, N)
    idx = np.arange(2 * h + 1)
    m = np.ascontiguousarray(k[idx[:, None] - idx[None, :] + 2 * h])
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class AnProbability:
    prob: float
    rate: float
    stay: float


@functools.lru_cache(maxsize=64)
def a_n_probability(law: IncrementLaw, N: int) -> AnProbability:
    """P[A_N] by a killed forward recursion; ``rate`` is log(P[A_N]) / N.

    ``stay`` is P[|S_k - S_0| < N^2 for all k < N], without the return.
    """
    if N < 3:
        raise ValueError("N must be >= 3")
    h = half_width(N)
    k = _window_kernel(law, N)
    width = 2 * h + 1
    a = np.zeros(width)
    a[h] = 1.0
    for _ in range(N - 1):
        a = signal.fftconvolve(a, k)[2 * h:2 * h + width]
        np.maximum(a, 0.0, out=a)  # clear FFT round-off below zero
    prob = float(a[h])
    rate = math.log(prob) / N if prob > 0 else -math.inf
    return AnProbability(prob, rate, float(a.sum()))


def restricted_W(fld: LatticeField, law: IncrementLaw, beta: float, N: int,
                 i: int = 0, j: int = 0) -> float:
    """Normalised partition function of R_{i,j} conditioned on A_N."""
    if N < 3:
        raise ValueError("N must be >= 3")
    if i < 0:
        raise ValueError("rectangle column index must be nonnegative")
    pan = a_n_probability(law, N)
    if pan.prob <= 0.0:
        raise ValueError(f"no path satisfies A_N for N={N} under this law")
    if beta == 0.0:
        return 1.0
    h = half_width(N)
    times = i * N + 1 + np.arange(N)
    sites = 2 * j * N * N + np.arange(-h, h + 1)
    lw = beta * fld.grid(times, sites) - fld.env.lam(beta)
    shift = lw.max(axis=1)
    weights = np.exp(lw - shift[:, None])
    init = np.zeros(2 * h + 1)
    init[h] = weights[0, h]
    _, row, log_scale = _kernels.forward_dp(_window_matrix(law, N), weights[1:], init)
    return float(math.exp(log_scale + shift.sum() + math.log(row[h]) - math.log(pan.prob)))


def rectangle_sample(fld: LatticeField, law: IncrementLaw, beta: float, N: int,
                     count: int, j: int = 0) -> np.ndarray:
    """restricted_W over the rectangles (0, j), (1, j), ..., (count - 1, j)."""
    return np.array([restricted_W(fld, law, beta, N, i, j) for i in range(count)])


def dyadic_levels_sum(sample: np.ndarray) -> float:
    """sum_n 2^n * P_hat[W >= 2^(n - 1)] under the empirical measure."""
    sample = np.asarray(sample)
    top = float(sample.max())
    total = 0.0
    n = 0
    while 2.0 ** (n - 1) <= top:
        total += 2.0**n * float(np.mean(sample >= 2.0 ** (n - 1)))
        n += 1
    return total


@dataclass(frozen=True)
class GoodRectangleStats:
    eta: float
    p_eta_hat: float
    p_eta_se: float
    n0: int
    samples: int
    verify_p: float
    verify_se: float
    lemma_bound: float
    mean_w: float
    mean_w_se: float
    second_moment: float
    second_moment_se: float
    ceiling: float
    extra: dict = field(default_factory=dict)

    @property
    def verified(self) -> bool:
        return self.verify_p + 3.0 * self.verify_se >= self.lemma_bound


def eq_up_holds(n: int, p_hat: float) -> bool:
    """(3 / pi^2) (n + 1)^-2 <= 2^n p_hat."""
    return _THREE_OVER_PI2 / (n + 1) ** 2 <= 2.0**n * p_hat


def dyadic_eta_search(field_family: Callable[[int], LatticeField], law: IncrementLaw,
                      env: EnvironmentLaw, beta: float, N: int, samples: int,
                      seed: int = 0, check: bool = True) -> GoodRectangleStats:
    """Smallest dyadic level n0 meeting the plug-in inequality.

    ``field_family(seed)`` supplies fields; the search sample and the
    verification sample come from disjoint rectangle rows of independent
    fields, so the asserted inequality is not evaluated on the data that
    selected n0.
    """
    if samples < 200:
        raise ValueError("need at least 200 samples")
    search_field = field_family(_kernels.mix64(seed, 1))
    verify_field = field_family(_kernels.mix64(seed, 2))
    if search_field.env != env:
        raise ValueError("field environment differs from env")
    w = rectangle_sample(search_field, law, beta, N, samples, j=0)
    v = rectangle_sample(verify_field, law, beta, N, samples, j=1)
    top = float(w.max())
    n = 0
    while True:
        level = 2.0 ** (n - 1)
        if level > top:
            raise ContractViolation(
                f"no dyadic level found below the sample max {top:.6g}; "
                f"sample quantiles {np.quantile(w, [0.0, 0.5, 0.9, 1.0]).tolist()}"
            )
        p_hat = float(np.mean(w >= level))
        if eq_up_holds(n, p_hat):
            break
        n += 1
    eta = 2.0 ** (n - 1)
    vp = float(np.mean(v >= eta))
    lam2 = env.lam(2.0 * beta) - 2.0 * env.lam(beta)
    sq = w * w
    stats = GoodRectangleStats(
        eta=eta,
        p_eta_hat=p_hat,
        p_eta_se=math.sqrt(p_hat * (1.0 - p_hat) / samples),
        n0=n,
        samples=samples,
        verify_p=vp,
        verify_se=math.sqrt(vp * (1.0 - vp) / samples),
        lemma_bound=_THREE_OVER_PI2 * 2.0 ** (-n) / (n + 1) ** 2,
        mean_w=float(w.mean()),
        mean_w_se=float(w.std(ddof=1) / math.sqrt(samples)),
        second_moment=float(sq.mean()),
        second_moment_se=float(sq.std(ddof=1) / math.sqrt(samples)),
        ceiling=math.exp(lam2 * N),
        extra={"levels_sum": dyadic_levels_sum(w), "verify_levels_sum": dyadic_levels_sum(v)},
    )
    if check:
        if not stats.verified:
            raise ContractViolation("plug-in level inequality fails on the verification sample")
        if stats.second_moment > stats.ceiling * (1.0 + 4.0 * stats.second_moment_se):
            raise ContractViolation("second moment exceeds its ceiling")
        if stats.extra["levels_sum"] < 0.5:
            raise ContractViolation("dyadic level sum below 1/2")
    return stats


def c_l_eps(law: IncrementLaw, eps: float, k_from: float = 1.0) -> float:
    """inf{x^eps L(x) : x >= k_from} for L(x) = x K(x), on the real shape.

    The search runs in log x; it extends past 1e9 whenever the minimiser
    lies there (small eps).
    """
    if law.is_nearest_neighbor:
        raise ValueError("nearest_neighbor has no slowly varying profile")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    lo = math.log(max(k_from, 1.0))
    hi = max(math.log(1e9), lo + 60.0 / eps)
    f = lambda t: eps * t + float(law.log_slowly_varying(t))  # noqa: E731
    grid = np.linspace(lo, hi, 4001)
    vals = eps * grid + law.log_slowly_varying(grid)
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    best = float(vals[k])
    if b > a:
        res = optimize.minimize_scalar(f, bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return math.exp(best)


def lower_bound_assembly(N: int, epsilon: float, eta: float, p_eta: float, PAN: float,
                         C_L_eps: float) -> float:
    """(log eta)/N + log(C / (2N^2)^(1+eps))/N - (1+eps)/N log(1/p + 1) + log(PAN)/N."""
    if min(N, eta, p_eta, PAN, C_L_eps) <= 0:
        raise ValueError("inputs must be positive")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return (math.log(eta) / N
            + (math.log(C_L_eps) - (1.0 + epsilon) * math.log(2.0 * N * N)) / N
            - (1.0 + epsilon) / N * math.log(1.0 / p_eta + 1.0)
            + math.log(PAN) / N)


def first_good_gaps(p: float, chains: int, rng: Optional[np.random.Generator] = None):
    """J_0 = min{j > 0 : rectangle j good} for independent good/bad columns.

    Returns the J_0 samples. Under this definition J_0 is geometric on
    {1, 2, ...} with mean 1/p; the looser value 1/p + 1 used in the bound
    is an upper estimate.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    rng = np.random.default_rng() if rng is None else rng
    out = np.empty(chains, dtype=np.int64)
    pending = np.arange(chains)
    j = 0
    while pending.size:
        j += 1
        good = rng.random(pending.size) < p
        out[pending[good]] = j
        pending = pending[~good]
    return out


@dataclass(frozen=True)
class PipelineResult:
    N: int
    beta: float
    stats: GoodRectangleStats
    PAN: float
    epsilon: float
    C_L_eps: float
    bound: float


def coarse_grain_pipeline(law: IncrementLaw, env: EnvironmentLaw, beta: float, N: int,
                          samples: int = 2000, epsilon: float = 0.1, seed: int = 0,
                          check: bool = True) -> PipelineResult:
    """Dyadic search, A_N, C_{L,eps} and the assembled bound for one N."""
    stats = dyadic_eta_search(lambda s: LatticeField(s, env), law, env, beta, N, samples,
                              seed=seed, check=check)
    pan = a_n_probability(law, N).prob
    c = c_l_eps(law, epsilon)
    bound = lower_bound_assembly(N, epsilon, stats.eta, stats.p_eta_hat, pan, c)
    if check and bound > 0:
        raise ContractViolation(f"assembled bound {bound} is positive")
    return PipelineResult(N, beta, stats, pan, epsilon, c, bound)

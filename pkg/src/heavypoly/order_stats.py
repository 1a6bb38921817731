"""Extremes of tail-exponent-zero samples, compared on the log scale.

Streams are built from shared uniforms through the generalised inverse of
F(x) = P[|X| <= x]; the largest and second largest |X_i| therefore come from
the two smallest complements q = 1 - U. Values that no longer fit an integer
are handled as LogMagnitude, so every event below is a comparison of logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import _kernels
from .errors import ContractViolation
from .logmag import LogMagnitude
from .walk_laws import IncrementLaw


def square_checkpoints(n_max: int) -> np.ndarray:
    """4, 9, 16, ... up to n_max."""
    k = np.arange(2, math.isqrt(n_max) + 1, dtype=np.int64)
    return k * k


def _magnitudes(law: IncrementLaw, q: np.ndarray):
    """(exact int64 or -1, ln magnitude) for upper probabilities q."""
    x, lnmag = law.upper_quantile(q.ravel())
    return x.reshape(q.shape), lnmag.reshape(q.shape)


def _exceeds_power(x: np.ndarray, lnmag: np.ndarray, K: float, n: int, factor: float = 1.0):
    """Elementwise |X| > factor * K^n; exact integers where the power fits."""
    log_bound = math.log(factor) + n * math.log(K)
    out = lnmag > log_bound
    if log_bound < 43.0:
        if float(K).is_integer() and float(factor).is_integer():
            bound = int(factor) * int(K) ** n
            ok = x >= 0
            out[ok] = x[ok] > bound
        else:
            bound = factor * K**n
            ok = x >= 0
            out[ok] = x[ok].astype(np.float64) > bound
    return out


def _second_small_enough(x1, l1, x2, l2, n: int):
    """max2 <= max1 / (2n), in integers when both are exact."""
    with np.errstate(invalid="ignore"):
        out = l2 <= l1 - math.log(2 * n)
    both = (x1 >= 0) & (x2 >= 0)
    # exact: 2n * x2 <= x1 (fits int64 since x1, x2 < 1e9 + 1)
    out[both] = 2 * n * x2[both] <= x1[both]
    out[x2 == 0] = True
    return out


@dataclass(frozen=True)
class ExtremeRecord:
    n: int
    max1: LogMagnitude
    max2: LogMagnitude

    def B(self, K: float) -> bool:
        if self.max1.is_exact:
            return bool(_exceeds_power(np.array([self.max1.exact]), np.array([float(self.max1.lnmag)]),
                                       K, self.n)[0])
        return self.max1.lnmag > self.n * math.log(K)

    @property
    def C(self) -> bool:
        if self.max2.sign == 0:
            return True
        if self.max1.is_exact and self.max2.is_exact:
            return 2 * self.n * self.max2.exact <= self.max1.exact
        return self.max2.lnmag <= self.max1.lnmag - math.log(2 * self.n)

    def sum_lower_bound(self) -> LogMagnitude:
        """max1 - (n - 1) * max2, the lower bound for |S_n|."""
        if self.max1.is_exact and self.max2.is_exact:
            return LogMagnitude.from_int(max(self.max1.exact - (self.n - 1) * self.max2.exact, 0))
        return self.max1.minus_scaled(self.max2, self.n - 1)

    def chain_holds(self) -> bool:
        """On C: max1 - (n-1) max2 >= max1 (1 - (n-1)/(2n)) >= max1 / 2."""
        n = self.n
        if self.max1.is_exact and self.max2.is_exact:
            x1, x2 = self.max1.exact, self.max2.exact
            first = 2 * n * (x1 - (n - 1) * x2) >= (n + 1) * x1
            return first and (n + 1) * x1 * 2 >= 2 * n * x1
        lower = self.sum_lower_bound()
        mid = float(self.max1.lnmag) + math.log((n + 1) / (2 * n))
        half = float(self.max1.lnmag) - math.log(2.0)
        tol = 1e-12 * max(1.0, abs(float(self.max1.lnmag)))
        return lower.sign > 0 and float(lower.lnmag) >= mid - tol and mid >= half


@dataclass(frozen=True)
class ExtremesTable:
    checkpoints: np.ndarray
    freq_B: np.ndarray
    freq_C: np.ndarray
    freq_D: np.ndarray
    freq_max_below: np.ndarray
    chain_ok: bool
    replicas: int

    def rows(self) -> List[dict]:
        return [
            {"n": int(n), "freq_B": float(b), "freq_C": float(c), "freq_D": float(d)}
            for n, b, c, d in zip(self.checkpoints, self.freq_B, self.freq_C, self.freq_D)
        ]


def _stream_extremes(law, n_max, replicas, rng, chunk=None):
    """Yield per-chunk (q1, q2, counts) at square checkpoints."""
    cps = square_checkpoints(n_max)
    length = int(cps[-1])
    chunk = chunk or max(1, min(replicas, (1 << 22) // max(length, 1)))
    done = 0
    while done < replicas:
        m = min(chunk, replicas - done)
        q = 1.0 - rng.random((m, length))
        yield _kernels.top2_stream(q, cps)
        done += m


def run_extremes(law: IncrementLaw, n_max: int, K: float, replicas: int,
                 rng: Optional[np.random.Generator] = None) -> ExtremesTable:
    """Frequencies of B, C, D at the square checkpoints up to n_max."""
    if n_max < 4:
        raise ValueError("n_max must be at least 4")
    if K <= 0:
        raise ValueError("K must be positive")
    rng = np.random.default_rng() if rng is None else rng
    cps = square_checkpoints(n_max)
    nb = np.zeros(cps.size)
    nc = np.zeros(cps.size)
    nd = np.zeros(cps.size)
    below = np.zeros(cps.size)
    chain_ok = True
    for q1, q2, counts in _stream_extremes(law, n_max, replicas, rng):
        x1, l1 = _magnitudes(law, q1)
        x2, l2 = _magnitudes(law, q2)
        for c, n in enumerate(cps):
            n = int(n)
            b = _exceeds_power(x1[:, c], l1[:, c], K, n)
            cc = _second_small_enough(x1[:, c], l1[:, c], x2[:, c], l2[:, c], n)
            nb[c] += b.sum()
            below[c] += (~b).sum()
            nc[c] += cc.sum()
            if c < cps.size - 1:
                nd[c] += (counts[:, c] <= 1).sum()
            for r in np.flatnonzero(cc)[:64]:
                rec = _record(n, x1[r, c], l1[r, c], x2[r, c], l2[r, c])
                chain_ok &= rec.chain_holds()
    if not chain_ok:
        raise ContractViolation("sum lower-bound chain failed on a replica where C holds")
    nd[-1] = np.nan
    return ExtremesTable(cps, nb / replicas, nc / replicas, nd / replicas, below / replicas,
                         chain_ok, replicas)


def _to_logmag(x, lnmag) -> LogMagnitude:
    if x >= 0:
        return LogMagnitude.from_int(int(x))
    return LogMagnitude(1, float(lnmag))


def _record(n, x1, l1, x2, l2) -> ExtremeRecord:
    return ExtremeRecord(n, _to_logmag(x1, l1), _to_logmag(x2, l2))


def max_below_closed_form(law: IncrementLaw, n: int, K: float) -> float:
    """P[max_{i<=n} |X_i| <= K^n] = (1 - 2 T(floor(K^n) + 1))^n."""
    log_bound = n * math.log(K)
    if log_bound < 43.0:
        bound = int(K) ** n if float(K).is_integer() else math.floor(K**n)
        t = law.tail(bound + 1)
    else:
        t = math.exp(law.log_tail_lnx(log_bound))
    return (1.0 - 2.0 * t) ** n


def uniform_tau_identity(n: int, replicas: int, rng: Optional[np.random.Generator] = None):
    """Frequency that U_{n^2+1} beats the second largest of U_1..U_{n^2}.

    Returns (freq, stderr, 2 / (n^2 + 1)).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if replicas < 10_000:
        raise ValueError("need at least 10^4 replicas")
    rng = np.random.default_rng() if rng is None else rng
    m = n * n
    hits = 0
    chunk = max(1, (1 << 22) // (m + 1))
    done = 0
    while done < replicas:
        r = min(chunk, replicas - done)
        u = rng.random((r, m + 1))
        second = np.partition(u[:, :m], m - 2, axis=1)[:, m - 2]
        hits += int(np.count_nonzero(u[:, m] > second))
        done += r
    f = hits / replicas
    return f, math.sqrt(f * (1.0 - f) / replicas), 2.0 / (m + 1)


@dataclass(frozen=True)
class UnimodalResult:
    is_unimodal: bool
    max_violation: float
    mass_error: float
    asymmetry: float
    pmf: np.ndarray

    @property
    def passed(self) -> bool:
        return self.is_unimodal and self.max_violation <= 1.0 + 1e-12


def _is_symmetric_unimodal(p: np.ndarray) -> bool:
    c = p.size // 2
    right = p[c:]
    return bool(np.array_equal(p, p[::-1]) and np.all(np.diff(right) <= 0.0))


def unimodal_convolution_check(law: IncrementLaw, n_steps: int, R: int) -> UnimodalResult:
    """n-fold convolution of the law truncated to [-R, R] and renormalised.

    ``max_violation`` is max over x != 0 of P[S_n = x] |x|. The raw floating
    result is symmetrised by averaging with its mirror image; the asymmetry
    removed that way is reported.
    """
    if n_steps < 1 or R < 1:
        raise ValueError("n_steps and R must be >= 1")
    base = law.pmf(np.arange(-R, R + 1))
    base = base / base.sum()
    base = 0.5 * (base + base[::-1])
    if not _is_symmetric_unimodal(base):
        raise ValueError("truncated law is not symmetric unimodal")
    raw = _kernels.convolve_power(base, n_steps)
    asym = float(np.max(np.abs(raw - raw[::-1])))
    out = 0.5 * (raw + raw[::-1])
    c = out.size // 2
    x = np.abs(np.arange(out.size) - c)
    nz = x > 0
    return UnimodalResult(
        is_unimodal=_is_symmetric_unimodal(out),
        max_violation=float(np.max(out[nz] * x[nz])) if np.any(nz) else 0.0,
        mass_error=abs(math.fsum(out) - 1.0),
        asymmetry=asym,
        pmf=out,
    )


@dataclass(frozen=True)
class GrowthResult:
    fraction: float
    stderr: float
    onset_median: float
    n_min: int
    onsets: np.ndarray


def growth_witness(law: IncrementLaw, K: float, n_max: int, replicas: int,
                   n_min: Optional[int] = None,
                   rng: Optional[np.random.Generator] = None) -> GrowthResult:
    """Fraction of replicas where max1 > 2 K^n and C hold at every checkpoint >= n_min.

    The onset of a replica is the first checkpoint from which the joint event
    holds through n_max (inf if it fails at n_max).
    """
    if K <= 0:
        raise ValueError("K must be positive")
    rng = np.random.default_rng() if rng is None else rng
    cps = square_checkpoints(n_max)
    n_min = n_max // 4 if n_min is None else n_min
    onsets = []
    ok_count = 0
    for q1, q2, _ in _stream_extremes(law, n_max, replicas, rng):
        x1, l1 = _magnitudes(law, q1)
        x2, l2 = _magnitudes(law, q2)
        good = np.empty(q1.shape, dtype=bool)
        for c, n in enumerate(cps):
            n = int(n)
            good[:, c] = (_exceeds_power(x1[:, c], l1[:, c], K, n, factor=2.0)
                          & _second_small_enough(x1[:, c], l1[:, c], x2[:, c], l2[:, c], n))
        tail_ok = np.logical_and.accumulate(good[:, ::-1], axis=1)[:, ::-1]
        window = cps >= n_min
        ok_count += int(np.all(good[:, window], axis=1).sum())
        for row in tail_ok:
            idx = np.flatnonzero(row)
            onsets.append(float(cps[idx[0]]) if idx.size else math.inf)
    onsets = np.array(onsets)
    f = ok_count / replicas
    return GrowthResult(f, math.sqrt(f * (1.0 - f) / replicas), float(np.median(onsets)), n_min, onsets)

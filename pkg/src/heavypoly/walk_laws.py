"""Symmetric integer increment laws with tail exponent zero.

A law puts an atom ``k0`` at 0 and, for ``n != 0``,
``K(n) = A * phi(|n| + m0)`` with a closed-form decreasing shape ``phi``:

=================  ==========================================  =====================
family             phi(x)                                      one-sided tail ~
=================  ==========================================  =====================
critical(alpha)    (log log x)**alpha / (x (log x)**2)         (loglog n)^a / log n
log_tail(a)        1 / (x (log x)**(1 + a)),  0 < a <= 1       (log n)**-a
loglog_tail(b)     1 / (x log x (log log x)**(1 + b)),  b > 0  (log log n)**-b
power_tail(a)      x**-(1 + a),  a > 0                         n**-a
nearest_neighbor   K(+-1) = (1 - k0) / 2                       --
=================  ==========================================  =====================

Tails are exact partial sums up to ``CROSSOVER`` and an Euler-Maclaurin
corrected integral beyond. Integer quantiles are exact up to ``EXACT_LIMIT``;
above that they are real roots of the integral tail solved on the
``log log`` scale and reported as :class:`LogMagnitude`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import mpmath
import numpy as np
from scipy import integrate, special

from .logmag import LogMagnitude

CROSSOVER = 10**6
EXACT_LIMIT = 10**9

FAMILIES = ("critical", "log_tail", "loglog_tail", "power_tail", "nearest_neighbor")
_PARAM_NAME = {"critical": "alpha", "log_tail": "a", "loglog_tail": "b", "power_tail": "a"}


class EntropyBracketError(ArithmeticError):
    pass


class _OverflowType:
    """Marker returned by :meth:`IncrementLaw.sample_exact` beyond the cap."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Overflow"

    def __reduce__(self):
        return (_OverflowType, ())


Overflow = _OverflowType()


def upper_gamma(s: float, x):
    """Upper incomplete gamma ``Gamma(s, x)`` for any real ``s`` and ``x > 0``."""
    x = np.asarray(x, dtype=np.float64)
    k = max(0, math.ceil(-s))
    base = s + k
    if base == 0:
        g = special.exp1(x)
    else:
        g = special.gammaincc(base, x) * special.gamma(base)
    for j in range(k):
        cur = base - 1 - j
        g = (g - x**cur * np.exp(-x)) / cur
    return g


# ---------------------------------------------------------------------------
# shape functions, all evaluated from l1 = log x and l2 = log log x
# ---------------------------------------------------------------------------

def _log_shape(family, p, l1, l2):
    if family == "critical":
        return p * np.log(l2) - l1 - 2.0 * l2
    if family == "log_tail":
        return -l1 - (1.0 + p) * l2
    if family == "loglog_tail":
        return -l1 - l2 - (1.0 + p) * np.log(l2)
    if family == "power_tail":
        return -(1.0 + p) * l1
    raise ValueError(family)


def _dlog_shape(family, p, l1, l2):
    """x * d/dx log phi(x)."""
    if family == "critical":
        return p / (l1 * l2) - 1.0 - 2.0 / l1
    if family == "log_tail":
        return -1.0 - (1.0 + p) / l1
    if family == "loglog_tail":
        return -1.0 - 1.0 / l1 - (1.0 + p) / (l1 * l2)
    if family == "power_tail":
        return -(1.0 + p) + 0.0 * l1
    raise ValueError(family)


def _log_integral(family, p, l1, l2):
    """log of int_X^inf phi(x) dx, with l1 = log X, l2 = log log X."""
    with np.errstate(over="ignore", divide="ignore"):
        if family == "critical":
            return np.log(upper_gamma(p + 1.0, l2))
        if family == "log_tail":
            return -p * l2 - math.log(p)
        if family == "loglog_tail":
            return -p * np.log(l2) - math.log(p)
        if family == "power_tail":
            return -p * np.exp(l2) - math.log(p)
    raise ValueError(family)


def _logs_of(x):
    l1 = np.log(np.asarray(x, dtype=np.float64))
    return l1, np.log(l1)


def _critical_min_m0(alpha: float) -> int:
    # phi decreasing on [x, inf) iff alpha < loglog x (log x + 2); rhs increases in x
    m0 = 3
    while True:
        x = m0 + 1.0
        if alpha < math.log(math.log(x)) * (math.log(x) + 2.0):
            return m0
        m0 += 1


@dataclass(frozen=True)
class EntropyResult:
    finite: bool
    value: float
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __repr__(self):
        if self.finite:
            return f"Finite({self.value!r}, width={self.width:.3g})"
        return f"Divergent(lower_bound={self.value!r})"


@dataclass(frozen=True)
class IncrementLaw:
    """Symmetric unimodal increment law; immutable and safe to share."""

    family: str
    param: float = 0.0
    m0: int = 3
    k0: float = 0.5
    norm_const: float = field(init=False, repr=False, compare=False)

    # -- construction -----------------------------------------------------

    @classmethod
    def critical(cls, alpha: float, m0: Optional[int] = None, k0: float = 0.5):
        return cls("critical", float(alpha), _critical_min_m0(alpha) if m0 is None else m0, k0)

    @classmethod
    def log_tail(cls, a: float, m0: int = 3, k0: float = 0.5):
        return cls("log_tail", float(a), m0, k0)

    @classmethod
    def loglog_tail(cls, b: float, m0: int = 3, k0: float = 0.5):
        return cls("loglog_tail", float(b), m0, k0)

    @classmethod
    def power_tail(cls, a: float, m0: int = 3, k0: float = 0.5):
        return cls("power_tail", float(a), m0, k0)

    @classmethod
    def nearest_neighbor(cls, k0: float = 0.0):
        return cls("nearest_neighbor", 0.0, 0, k0)

    @classmethod
    def from_config(cls, block: dict) -> "IncrementLaw":
        block = {str(k).lower(): v for k, v in block.items()}
        fam = str(block.get("family", "critical")).lower().replace("-", "_")
        if fam in ("nn", "nearestneighbor"):
            fam = "nearest_neighbor"
        if fam not in FAMILIES:
            raise ValueError(f"unknown family {fam!r}")
        k0 = float(block.get("k0", 0.0 if fam == "nearest_neighbor" else 0.5))
        if fam == "nearest_neighbor":
            return cls.nearest_neighbor(k0)
        pname = _PARAM_NAME[fam]
        default = {"alpha": -2.0, "a": 1.0, "b": 1.0}[pname]
        p = float(block.get(pname, block.get("param", default)))
        m0 = block.get("m0")
        if fam == "critical":
            return cls.critical(p, None if m0 is None else int(m0), k0)
        return cls(fam, p, 3 if m0 is None else int(m0), k0)

    def to_config(self) -> dict:
        out = {"family": self.family}
        if self.family != "nearest_neighbor":
            out[_PARAM_NAME[self.family]] = self.param
            out["m0"] = self.m0
        out["k0"] = self.k0
        return out

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "nearest_neighbor":
            if not 0.0 <= self.k0 < 1.0:
                raise ValueError("k0 must lie in [0, 1)")
            object.__setattr__(self, "norm_const", (1.0 - self.k0) / 2.0)
            return
        if not 0.0 < self.k0 < 1.0:
            raise ValueError("k0 must lie in (0, 1)")
        if self.m0 < 3:
            raise ValueError("m0 must be >= 3")
        p = self.param
        if self.family == "log_tail" and not 0.0 < p <= 1.0:
            raise ValueError("log_tail needs 0 < a <= 1")
        if self.family in ("loglog_tail", "power_tail") and not p > 0.0:
            raise ValueError(f"{self.family} needs a positive parameter")
        if self.family == "critical":
            x = self.m0 + 1.0
            if not p < math.log(math.log(x)) * (math.log(x) + 2.0):
                raise ValueError(
                    f"m0={self.m0} leaves the critical shape non-monotone for alpha={p}; "
                    f"use m0 >= {_critical_min_m0(p)}"
                )
        object.__setattr__(self, "norm_const", (1.0 - self.k0) / (2.0 * float(self._shape_rtail[1])))
        if self.pmf(1) > self.k0:
            raise ValueError("k0 below K(1) breaks unimodality")

    def __getstate__(self):
        # the tail tables are rebuilt lazily; keep pickles small for workers
        state = dict(self.__dict__)
        state.pop("_shape_rtail", None)
        state.pop("_tail_table", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)

    # -- internal tables --------------------------------------------------

    def _em_tail_sum(self, big_x):
        """Sum of phi(x) over integers x >= X via Euler-Maclaurin (X >= ~1e6)."""
        l1, l2 = _logs_of(big_x)
        lphi = _log_shape(self.family, self.param, l1, l2)
        phi = np.exp(lphi)
        dphi = phi * _dlog_shape(self.family, self.param, l1, l2) / np.asarray(big_x, dtype=np.float64)
        return np.exp(_log_integral(self.family, self.param, l1, l2)) + phi / 2.0 - dphi / 12.0

    @cached_property
    def _shape_rtail(self):
        """r[m] = sum_{k >= m} phi(k + m0) for m = 1..CROSSOVER + 1 (r[0] unused)."""
        x = np.arange(1, CROSSOVER + 1, dtype=np.float64) + self.m0
        l1, l2 = _logs_of(x)
        phi = np.exp(_log_shape(self.family, self.param, l1, l2))
        r = np.empty(CROSSOVER + 2)
        r[CROSSOVER + 1] = float(self._em_tail_sum(float(CROSSOVER + 1 + self.m0)))
        r[1:CROSSOVER + 1] = np.cumsum(phi[::-1])[::-1] + r[CROSSOVER + 1]
        r[0] = np.nan
        return r

    @cached_property
    def _tail_table(self):
        """T(s) for s = 1..CROSSOVER + 1, decreasing."""
        return self.norm_const * self._shape_rtail[1:]

    @property
    def is_nearest_neighbor(self) -> bool:
        return self.family == "nearest_neighbor"

    @property
    def positive_everywhere(self) -> bool:
        return not self.is_nearest_neighbor

    # -- pmf --------------------------------------------------------------

    def log_pmf(self, n):
        """log K(n); scalar or array of integers."""
        scalar = np.ndim(n) == 0
        n = np.abs(np.asarray(n, dtype=np.int64))
        if self.is_nearest_neighbor:
            with np.errstate(divide="ignore"):
                out = np.where(n == 0, np.log(self.k0), np.where(n == 1, math.log(self.norm_const), -np.inf))
        else:
            x = (n + self.m0).astype(np.float64)
            l1, l2 = _logs_of(x)
            out = math.log(self.norm_const) + _log_shape(self.family, self.param, l1, l2)
            out = np.where(n == 0, math.log(self.k0), out)
        return float(out) if scalar else out

    def pmf(self, n):
        out = np.exp(self.log_pmf(n))
        return float(out) if np.ndim(out) == 0 else out

    def log_pmf_lnx(self, lnx):
        """log K at a real point x >= 1 given by ln x (for relaxed quantiles)."""
        if self.is_nearest_neighbor:
            raise ValueError("nearest_neighbor has no continuous shape")
        lnx = np.asarray(lnx, dtype=np.float64)
        l1 = lnx + np.log1p(self.m0 * np.exp(-lnx))
        out = math.log(self.norm_const) + _log_shape(self.family, self.param, l1, np.log(l1))
        return float(out) if out.ndim == 0 else out

    # -- tails ------------------------------------------------------------

    def tail(self, n):
        """One-sided tail P[X >= n] for integers n >= 1 (scalar or int64 array)."""
        if np.ndim(n) == 0:
            n = int(n)
            if n < 1:
                raise ValueError("tail needs n >= 1")
            if self.is_nearest_neighbor:
                return self.norm_const if n == 1 else 0.0
            if n <= CROSSOVER + 1:
                return float(self._tail_table[n - 1])
            return float(self.norm_const * self._em_tail_sum(float(n + self.m0)))
        n = np.asarray(n, dtype=np.int64)
        if np.any(n < 1):
            raise ValueError("tail needs n >= 1")
        if self.is_nearest_neighbor:
            return np.where(n == 1, self.norm_const, 0.0)
        out = np.empty(n.shape)
        small = n <= CROSSOVER + 1
        out[small] = self._tail_table[n[small] - 1]
        big = ~small
        if np.any(big):
            out[big] = self.norm_const * self._em_tail_sum((n[big] + self.m0).astype(np.float64))
        return out

    def log_tail_lnx(self, lnx):
        """log of the relaxed tail A * int_{x+m0}^inf phi at real x = exp(lnx)."""
        if self.is_nearest_neighbor:
            raise ValueError("nearest_neighbor has no continuous tail")
        lnx = np.asarray(lnx, dtype=np.float64)
        with np.errstate(over="ignore"):
            l1 = lnx + np.log1p(self.m0 * np.exp(-lnx))
        out = math.log(self.norm_const) + _log_integral(self.family, self.param, l1, np.log(l1))
        return float(out) if out.ndim == 0 else out

    def tail_at(self, x: Union[int, LogMagnitude]) -> float:
        """P[X >= x] for an integer or a LogMagnitude (relaxed when not exact)."""
        if isinstance(x, LogMagnitude):
            if x.exact is not None:
                x = x.exact
            elif x.sign <= 0:
                return self.tail(1)
            else:
                if self.is_nearest_neighbor:
                    return 0.0
                return float(math.exp(self.log_tail_lnx(float(x.lnmag))))
        x = int(x)
        return self.tail(max(x, 1))

    def cdf(self, x):
        """P[|X| <= x] for integers x >= 0."""
        x = np.asarray(x, dtype=np.int64)
        out = 1.0 - 2.0 * self.tail(x + 1)
        return float(out) if np.ndim(out) == 0 else out

    # -- generalised inverses ---------------------------------------------

    def _first_below(self, t, rtol=1e-12):
        """Smallest s >= 1 with T(s) <= t, vectorised.

        Returns (s, l1) where s is int64 (-1 when the root lies beyond
        EXACT_LIMIT) and l1 = log(s + m0) of the relaxed real root there.
        """
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        thr = t * (1.0 + rtol)
        s = np.full(t.shape, -1, dtype=np.int64)
        l1 = np.full(t.shape, np.nan)
        if self.is_nearest_neighbor:
            s[:] = np.where(self.norm_const <= thr, 1, 2)
            return s, l1
        table = self._tail_table
        idx = np.searchsorted(-table, -thr, side="left")
        in_table = idx < table.size
        s[in_table] = idx[in_table] + 1
        rest = ~in_table
        if not np.any(rest):
            return s, l1
        t_lim = self.tail(EXACT_LIMIT)
        mid_region = rest & (t_lim <= thr)
        if np.any(mid_region):
            tt = thr[mid_region]
            lo = np.full(tt.shape, CROSSOVER + 1, dtype=np.int64)
            hi = np.full(tt.shape, EXACT_LIMIT, dtype=np.int64)
            while np.any(hi - lo > 1):
                mid = (lo + hi) // 2
                ok = self.tail(mid) <= tt
                hi = np.where(ok, mid, hi)
                lo = np.where(ok, lo, mid)
            s[mid_region] = hi
        deep = rest & (t_lim > thr)
        if np.any(deep):
            l1[deep] = self._relaxed_root_l1(t[deep])
        return s, l1

    def _relaxed_root_l1(self, t):
        """Solve A * I(X) = t for l1 = log X by bisection on log log X."""
        target = np.log(t) - math.log(self.norm_const)
        lo = np.full(t.shape, math.log(math.log(EXACT_LIMIT + self.m0)))
        step = 1.0
        hi = lo + step
        f = lambda l2: _log_integral(self.family, self.param, np.exp(l2), l2) - target  # noqa: E731
        with np.errstate(over="ignore", invalid="ignore"):
            while True:
                bad = ~(f(hi) <= 0.0)
                if not np.any(bad):
                    break
                step *= 2.0
                hi = np.where(bad, lo + step, hi)
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if np.all((hi - lo) <= 4e-16 * np.abs(hi)):
                    break
                ok = f(mid) <= 0.0
                hi = np.where(ok, mid, hi)
                lo = np.where(ok, lo, mid)
            return np.exp(hi)

    def _lnmag_from_l1(self, l1, shift):
        """ln(X - shift) for X = exp(l1) (float, or mpf past double range)."""
        if l1 < 700.0:
            return float(l1 + math.log1p(-shift * math.exp(-l1)))
        return l1

    def upper_quantile(self, q):
        """Vectorised generalised inverse of |X| from upper probabilities.

        ``q = 1 - u``. Returns (x, lnmag): x is the int64 quantile (-1 where it
        exceeds EXACT_LIMIT) and lnmag = ln x (-inf for 0, relaxed root beyond
        the exact range, +inf past double range).
        """
        q = np.atleast_1d(np.asarray(q, dtype=np.float64))
        s, l1 = self._first_below(q / 2.0)
        x = np.where(s > 0, s - 1, -1)
        with np.errstate(divide="ignore", over="ignore"):
            lnmag = np.where(x >= 0, np.log(np.maximum(x, 0).astype(np.float64)), np.nan)
            deep = x < 0
            if np.any(deep):
                ld = l1[deep]
                lnmag[deep] = ld + np.log1p(-(self.m0 + 1) * np.exp(-ld))
        return x, lnmag

    def quantile_logmag(self, u: float) -> LogMagnitude:
        """Generalised inverse inf{x : P[|X| <= x] >= u} as a LogMagnitude."""
        if not 0.0 < u < 1.0:
            raise ValueError("u must lie in (0, 1)")
        return self.quantile_upper_logmag(1.0 - u)

    def quantile_upper_logmag(self, q: float) -> LogMagnitude:
        """Same inverse parameterised by the upper probability q = 1 - u."""
        if not 0.0 < q <= 1.0:
            raise ValueError("q must lie in (0, 1]")
        s, _ = self._first_below(np.array([q / 2.0]))
        if s[0] > 0:
            return LogMagnitude.from_int(int(s[0]) - 1)
        l1 = self._relaxed_l1_scalar(q / 2.0)
        return LogMagnitude(1, self._lnmag_from_l1(l1, self.m0 + 1))

    def _relaxed_l1_scalar(self, t):
        """Relaxed root l1 = log X; mpf when X's logarithm passes double range."""
        l1 = float(self._relaxed_root_l1(np.array([t]))[0])
        if math.isfinite(l1):
            return l1
        # log X itself overflows: redo the bisection on l2 and exponentiate in mpmath
        target = math.log(t) - math.log(self.norm_const)
        lo, hi = math.log(709.0), math.log(709.0) + 1.0
        f = lambda l2: float(_log_integral(self.family, self.param, math.inf, l2)) - target  # noqa: E731
        if self.family != "loglog_tail":
            raise OverflowError("relaxed quantile beyond representable range")
        while f(hi) > 0:
            hi = lo + 2 * (hi - lo)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if f(mid) <= 0:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 4e-16 * hi:
                break
        return mpmath.exp(mpmath.mpf(hi))

    def first_tail_below(self, t: float) -> Union[int, LogMagnitude]:
        """min{s in N : P[X >= s] <= t}; LogMagnitude beyond EXACT_LIMIT."""
        s, _ = self._first_below(np.array([t]))
        if s[0] > 0:
            return int(s[0])
        l1 = self._relaxed_l1_scalar(t)
        return LogMagnitude(1, self._lnmag_from_l1(l1, self.m0))

    # -- sampling ---------------------------------------------------------

    def sample_exact(self, rng: np.random.Generator, cap: int = EXACT_LIMIT, size=None):
        """Inverse-CDF draw; values with |X| > cap come back as Overflow.

        With ``size`` given returns (values, overflow_mask); overflowed entries
        hold 0. ``cap`` is clipped to EXACT_LIMIT, the exact-integer range.
        """
        if cap < 1:
            raise ValueError("cap must be >= 1")
        cap = min(int(cap), EXACT_LIMIT)
        n = 1 if size is None else size
        q = 1.0 - rng.random(n)
        neg = rng.random(n) < 0.5
        x, _ = self.upper_quantile(np.ravel(q))
        x = x.reshape(np.shape(q))
        over = (x < 0) | (x > cap)
        vals = np.where(over, 0, np.where(neg, -x, x)).astype(np.int64)
        if size is None:
            return Overflow if over.item() else int(vals.item())
        return vals, over

    def sample_log_pmf(self, rng: np.random.Generator, size: int):
        """log K(X) for i.i.d. draws X, using the relaxed shape past EXACT_LIMIT."""
        q = 1.0 - rng.random(size)
        rng.random(size)  # sign draws, kept so the stream matches sample_exact
        x, lnmag = self.upper_quantile(q)
        out = np.empty(size)
        exact = x >= 0
        out[exact] = self.log_pmf(x[exact])
        if np.any(~exact):
            out[~exact] = self.log_pmf_lnx(lnmag[~exact])
        return out

    # -- entropy ----------------------------------------------------------

    @property
    def entropy_diverges(self) -> bool:
        if self.family == "critical":
            return self.param >= -1.0
        return self.family in ("log_tail", "loglog_tail")

    def entropy(self, tol: float = 1e-6) -> EntropyResult:
        """H(K) = sum_n K(n) log(1/K(n)) with a rigorous tail bracket."""
        if tol <= 0:
            raise ValueError("tol must be positive")
        k0 = self.k0
        head = -k0 * math.log(k0) if k0 > 0 else 0.0
        if self.is_nearest_neighbor:
            v = head - (1.0 - k0) * math.log(self.norm_const)
            return EntropyResult(True, v, v, v)
        logA = math.log(self.norm_const)
        x = np.arange(1, CROSSOVER + 1, dtype=np.float64) + self.m0
        l1, l2 = _logs_of(x)
        logk = logA + _log_shape(self.family, self.param, l1, l2)
        partial = head + 2.0 * math.fsum(-np.exp(logk) * logk)
        if self.entropy_diverges:
            return EntropyResult(False, partial, partial, math.inf)
        big_x = float(CROSSOVER + 1 + self.m0)
        integral, err = self._entropy_tail_integral(big_x)
        bl1, bl2 = _logs_of(big_x)
        lk = logA + float(_log_shape(self.family, self.param, bl1, bl2))
        g_first = -math.exp(lk) * lk
        lower = partial + 2.0 * (integral - err)
        upper = partial + 2.0 * (integral + err + g_first)
        res = EntropyResult(True, partial + 2.0 * (integral + 0.5 * g_first), lower, upper)
        if res.width >= tol:
            raise EntropyBracketError(f"entropy bracket width {res.width:.3g} >= tol {tol:.3g}")
        return res

    def _entropy_tail_integral(self, big_x):
        """int_X^inf g(x) dx with g = -A phi log(A phi); returns (value, abs error)."""
        A = self.norm_const
        logA = math.log(A)
        p = self.param
        l1 = math.log(big_x)
        if self.family == "power_tail":
            base = big_x**-p / p
            with_log = big_x**-p * (p * l1 + 1.0) / p**2
            return A * (-logA * base + (1.0 + p) * with_log), 0.0
        if self.family == "critical":
            v0 = math.log(l1)
            g1 = float(upper_gamma(p + 1.0, v0))
            g2 = float(upper_gamma(p + 2.0, v0))
            pure = -(v0 ** (p + 1.0)) / (p + 1.0)
            j, jerr = integrate.quad(lambda v: v**p * math.exp(-v) * math.log(v), v0, math.inf,
                                     epsabs=1e-14, epsrel=1e-12, limit=200)
            return A * (-logA * g1 + pure + 2.0 * g2 - p * j), A * abs(p) * jerr
        raise EntropyBracketError(f"no tail bracket for family {self.family}")

    # -- tail conditions ------------------------------------------------

    def s_n(self, n: int) -> Union[int, LogMagnitude]:
        """min{s in N : P[X >= s] <= (log n)^2 / n}."""
        if n < 3:
            raise ValueError("s_n needs n >= 3")
        return self.first_tail_below(math.log(n) ** 2 / n)

    def condition_c_ratio(self, n: int, gamma: float):
        """(P[X in (s_n, 2n s_n)] / P[X >= s_n], ratio <= n**-gamma)."""
        if n < 3:
            raise ValueError("n must be >= 3")
        if not gamma > 0.5:
            raise ValueError("gamma must exceed 1/2")
        s = self.s_n(n)
        if isinstance(s, int):
            den = self.tail(s)
            hi = 2 * n * s
            num = 0.0 if hi <= s + 1 else self.tail(s + 1) - self.tail(hi)
            ratio = 0.0 if den == 0.0 else max(num, 0.0) / den
        else:
            lo = float(s.lnmag)
            if not math.isfinite(lo):
                raise OverflowError("s_n beyond double log range")
            diff = self.log_tail_lnx(lo + math.log(2 * n)) - self.log_tail_lnx(lo)
            ratio = -math.expm1(diff)
        return ratio, ratio <= n ** (-gamma)

    def log_slowly_varying(self, lnx):
        """log L(x) with L(x) = x K(x), at real x >= 1 given by ln x."""
        return np.asarray(lnx) + self.log_pmf_lnx(lnx)

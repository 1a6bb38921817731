"""Independent reference computations used by the test-suite.

Nothing here calls the package's tail tables, DP kernels or quantile code;
laws enter only through their defining shape formula.
"""

from __future__ import annotations

import functools
import itertools
import math

import mpmath
import numpy as np

BRUTE_LIMIT = 10**8
_CHUNK = 10**7


def shape(family, p, x):
    """phi(x) straight from the family definitions, float64."""
    x = np.asarray(x, dtype=np.float64)
    l1 = np.log(x)
    l2 = np.log(l1)
    if family == "critical":
        return l2**p / (x * l1**2)
    if family == "log_tail":
        return 1.0 / (x * l1 ** (1.0 + p))
    if family == "loglog_tail":
        return 1.0 / (x * l1 * l2 ** (1.0 + p))
    if family == "power_tail":
        return x ** (-(1.0 + p))
    raise ValueError(family)


def _mp_shape(family, p, x):
    l1 = mpmath.log(x)
    l2 = mpmath.log(l1)
    if family == "critical":
        return l2**p / (x * l1**2)
    if family == "log_tail":
        return 1 / (x * l1 ** (1 + p))
    if family == "loglog_tail":
        return 1 / (x * l1 * l2 ** (1 + p))
    return x ** (-(1 + p))


def _mp_remainder(family, p, start):
    """int_{start - 1/2}^inf phi, the midpoint-rule value of sum_{x >= start} phi(x)."""
    mpmath.mp.dps = 30
    a = mpmath.mpf(start) - mpmath.mpf(1) / 2
    # substitute x = e^t to tame the slow decay
    f = lambda t: _mp_shape(family, p, mpmath.exp(t)) * mpmath.exp(t)  # noqa: E731
    return float(mpmath.quad(f, [mpmath.log(a), mpmath.log(a) + 10, mpmath.log(a) + 100, mpmath.inf]))


@functools.lru_cache(maxsize=None)
def shape_sums(family, p, m0, limit=BRUTE_LIMIT):
    """(sum_{m=1}^{limit} phi(m + m0), remainder beyond limit) by chunked brute force."""
    total = 0.0
    for lo in range(1, limit + 1, _CHUNK):
        hi = min(lo + _CHUNK, limit + 1)
        x = np.arange(lo, hi, dtype=np.float64) + m0
        total += math.fsum(shape(family, p, x))
    return total, _mp_remainder(family, p, limit + 1 + m0)


def norm_const(law):
    head, rem = shape_sums(law.family, law.param, law.m0)
    return (1.0 - law.k0) / (2.0 * (head + rem))


def brute_tail(law, n, limit=BRUTE_LIMIT):
    """P[X >= n] by summing the pmf from n to ``limit`` plus the integral remainder."""
    A = norm_const(law)
    total = 0.0
    for lo in range(n, limit + 1, _CHUNK):
        hi = min(lo + _CHUNK, limit + 1)
        x = np.arange(lo, hi, dtype=np.float64) + law.m0
        total += math.fsum(shape(law.family, law.param, x))
    return A * (total + _mp_remainder(law.family, law.param, limit + 1 + law.m0))


def brute_entropy_critical(law, limit=BRUTE_LIMIT):
    """H(K) for a critical law: partial sum to ``limit`` plus an mpmath tail integral."""
    A = norm_const(law)
    logA = math.log(A)
    p = law.param
    total = -law.k0 * math.log(law.k0)
    for lo in range(1, limit + 1, _CHUNK):
        hi = min(lo + _CHUNK, limit + 1)
        x = np.arange(lo, hi, dtype=np.float64) + law.m0
        lk = logA + np.log(shape("critical", p, x))
        total += 2.0 * math.fsum(-np.exp(lk) * lk)
    mpmath.mp.dps = 30

    def g(v):  # x = exp(e^v): K dx = A v^p e^-v dv, log K = log A + p log v - e^v - 2v
        lk = logA + p * mpmath.log(v) - mpmath.exp(v) - 2 * v
        return -A * v**p * mpmath.exp(-v) * lk

    a = mpmath.log(mpmath.log(mpmath.mpf(limit + 1 + law.m0) - mpmath.mpf(1) / 2))
    rest = mpmath.quad(g, [a, a + 1, a + 5, a + 20, a + 100, mpmath.inf])
    return total + 2.0 * float(rest)


# ---------------------------------------------------------------------------
# partition functions
# ---------------------------------------------------------------------------

def ring_transition(law, M):
    """c[r] = P[jump = r mod (2M+1)] for the kernel cut to |j| <= 2M and renormalised."""
    width = 2 * M + 1
    raw = {j: float(law.pmf(j)) for j in range(-2 * M, 2 * M + 1)}
    z = math.fsum(raw.values())
    c = [0.0] * width
    for j, v in raw.items():
        c[j % width] += v / z
    return c


def enumerate_W(beta, N, M, law, env, fld):
    """W_N by summing over every position sequence on the ring."""
    width = 2 * M + 1
    c = ring_transition(law, M)
    lam = env.lam(beta)
    pos = list(range(-M, M + 1))
    w_site = {(n, z): math.exp(beta * fld.value(n, z) - lam) for n in range(1, N + 1) for z in pos}
    terms = []
    for path in itertools.product(pos, repeat=N):
        prob = 1.0
        prev = 0
        weight = 1.0
        for n, z in enumerate(path, start=1):
            prob *= c[(z - prev) % width]
            weight *= w_site[(n, z)]
            prev = z
        if prob:
            terms.append(prob * weight)
    return math.fsum(terms)


def mp_backward_W(beta, N, M, law, env, fld, dps=40):
    """W_N by a backward recursion in mpmath at ``dps`` digits."""
    mpmath.mp.dps = dps
    width = 2 * M + 1
    c = ring_transition(law, M)
    lam = mpmath.mpf(env.lam(beta))
    pos = list(range(-M, M + 1))
    b = {z: mpmath.mpf(1) for z in pos}
    for n in range(N, 0, -1):
        wn = {z: mpmath.exp(beta * mpmath.mpf(fld.value(n, z)) - lam) for z in pos}
        b = {z: mpmath.fsum(c[(y - z) % width] * wn[y] * b[y] for y in pos) for z in pos}
    return b[0]


def enumerate_restricted_W(fld, law, beta, N, i=0, j=0):
    """Conditioned rectangle partition function by listing all paths in A_N."""
    h = N * N - 1
    lam = fld.env.lam(beta)
    centre = 2 * j * N * N
    sites = range(-h, h + 1)
    num, den = [], []
    for mid in itertools.product(sites, repeat=N - 2):
        path = (0,) + mid + (0,)
        prob = 1.0
        for a, b in zip(path, path[1:]):
            prob *= float(law.pmf(b - a))
        if prob == 0.0:
            continue
        w = 1.0
        for k, z in enumerate(path):
            w *= math.exp(beta * fld.value(i * N + 1 + k, centre + z) - lam)
        num.append(prob * w)
        den.append(prob)
    return math.fsum(num) / math.fsum(den), math.fsum(den)

"""Inner loops: site hashing, forward DP, top-2 stream tracking, convolution.

Every kernel exists twice: ``*_np`` (vectorised numpy) and ``*_nb`` (explicit
loops, numba-compiled when available). The unsuffixed name is the one the
rest of the package calls; it points at the numba version unless
``HEAVYPOLY_NO_NUMBA`` is set (convolve_power always uses numpy).
"""

import numpy as np

from ._accel import USE_NUMBA, optional_njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


# ---------------------------------------------------------------------------
# counter-based hashing
# ---------------------------------------------------------------------------

def _mix_np(x):
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def site_uniforms_np(seed, n, z):
    """Uniforms in (0, 1) keyed by (seed, n, z); n and z broadcast."""
    n = np.asarray(n, dtype=np.int64).view(np.uint64)
    z = np.asarray(z, dtype=np.int64).view(np.uint64)
    h = _mix_np(np.uint64(seed))
    h = _mix_np(h ^ n)
    h = _mix_np(h ^ z)
    return ((h >> _S11).astype(np.float64) + 0.5) * _INV53


@optional_njit(cache=True)
def _mix_scalar(x):
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@optional_njit(cache=True)
def _site_grid_nb(seed, ns, zs, out):
    h0 = _mix_scalar(seed)
    for i in range(ns.shape[0]):
        h1 = _mix_scalar(h0 ^ ns[i])
        for j in range(zs.shape[0]):
            h = _mix_scalar(h1 ^ zs[j])
            out[i, j] = (np.float64(h >> np.uint64(11)) + 0.5) * (1.0 / 9007199254740992.0)
    return out


def site_grid_np(seed, ns, zs):
    ns = np.asarray(ns, dtype=np.int64)
    zs = np.asarray(zs, dtype=np.int64)
    return site_uniforms_np(seed, ns[:, None], zs[None, :])


def site_grid_nb(seed, ns, zs):
    ns = np.ascontiguousarray(ns, dtype=np.int64).view(np.uint64)
    zs = np.ascontiguousarray(zs, dtype=np.int64).view(np.uint64)
    out = np.empty((ns.shape[0], zs.shape[0]))
    return _site_grid_nb(np.uint64(seed), ns, zs, out)


def mix64(*words):
    """Fold integers into one 64-bit key (used for replica seeds)."""
    h = np.uint64(0)
    for w in words:
        h = _mix_np(h ^ np.asarray(w, dtype=np.int64).view(np.uint64))
    return int(h)


# ---------------------------------------------------------------------------
# forward dynamic programme with row rescaling
# ---------------------------------------------------------------------------

def forward_dp_np(trans, weights, init):
    """Run A_n = (trans @ A_{n-1}) * weights[n-1], rescaling every row.

    Returns (log of the row totals for n = 1..N, final rescaled row,
    accumulated log scale of the final row).
    """
    a = np.array(init, dtype=np.float64)
    nsteps = weights.shape[0]
    log_tot = np.empty(nsteps)
    log_scale = 0.0
    for n in range(nsteps):
        a = trans @ a
        a *= weights[n]
        top = a.max()
        a /= top
        log_scale += np.log(top)
        log_tot[n] = log_scale + np.log(a.sum())
    return log_tot, a, log_scale


@optional_njit(cache=True)
def forward_dp_nb(trans, weights, init):
    width = init.shape[0]
    nsteps = weights.shape[0]
    trans = np.ascontiguousarray(trans)
    a = init.astype(np.float64).copy()
    log_tot = np.empty(nsteps)
    log_scale = 0.0
    for n in range(nsteps):
        b = np.dot(trans, a)
        top = 0.0
        for i in range(width):
            b[i] *= weights[n, i]
            if b[i] > top:
                top = b[i]
        tot = 0.0
        for i in range(width):
            a[i] = b[i] / top
            tot += a[i]
        log_scale += np.log(top)
        log_tot[n] = log_scale + np.log(tot)
    return log_tot, a, log_scale


# ---------------------------------------------------------------------------
# top-2 order statistics along uniform streams
# ---------------------------------------------------------------------------

def top2_stream_np(q, checkpoints):
    """Track the two smallest complements q = 1 - U along each row.

    Small q means a large |X| under the monotone coupling, so the two
    smallest q are the maximum and second maximum. ``checkpoints`` are
    1-based stream lengths. Also counts second-maximum updates in the open
    window (checkpoints[c], checkpoints[c+1]); the last entry is -1.
    """
    reps, length = q.shape
    ncp = checkpoints.shape[0]
    q1 = np.full(reps, np.inf)
    q2 = np.full(reps, np.inf)
    out1 = np.empty((reps, ncp))
    out2 = np.empty((reps, ncp))
    counts = np.full((reps, ncp), -1, dtype=np.int64)
    running = np.zeros(reps, dtype=np.int64)
    c = 0
    for t in range(length):
        x = q[:, t]
        upd = x < q2
        running += upd
        new_min = x < q1
        q2 = np.where(new_min, q1, np.where(upd, x, q2))
        q1 = np.where(new_min, x, q1)
        step = t + 1
        if c < ncp and step == checkpoints[c]:
            out1[:, c] = q1
            out2[:, c] = q2
            if c > 0:
                # updates strictly between the previous checkpoint and this one
                counts[:, c - 1] = running - upd
            running = np.zeros(reps, dtype=np.int64)
            c += 1
    return out1, out2, counts


@optional_njit(cache=True)
def top2_stream_nb(q, checkpoints):
    reps, length = q.shape
    ncp = checkpoints.shape[0]
    out1 = np.empty((reps, ncp))
    out2 = np.empty((reps, ncp))
    counts = np.full((reps, ncp), -1, dtype=np.int64)
    for r in range(reps):
        q1 = np.inf
        q2 = np.inf
        running = 0
        c = 0
        for t in range(length):
            x = q[r, t]
            upd = x < q2
            if upd:
                running += 1
                if x < q1:
                    q2 = q1
                    q1 = x
                else:
                    q2 = x
            if c < ncp and t + 1 == checkpoints[c]:
                out1[r, c] = q1
                out2[r, c] = q2
                if c > 0:
                    counts[r, c - 1] = running - (1 if upd else 0)
                running = 0
                c += 1
    return out1, out2, counts


# ---------------------------------------------------------------------------
# repeated self-convolution
# ---------------------------------------------------------------------------

def convolve_power_np(pmf, n):
    out = np.array(pmf, dtype=np.float64)
    for _ in range(n - 1):
        out = np.convolve(out, pmf)
    return out


@optional_njit(cache=True)
def _convolve_nb(a, b):
    out = np.zeros(a.shape[0] + b.shape[0] - 1)
    for i in range(a.shape[0]):
        ai = a[i]
        for j in range(b.shape[0]):
            out[i + j] += ai * b[j]
    return out


def convolve_power_nb(pmf, n):
    pmf = np.ascontiguousarray(pmf, dtype=np.float64)
    out = pmf.copy()
    for _ in range(n - 1):
        out = _convolve_nb(out, pmf)
    return out


if USE_NUMBA:
    site_grid = site_grid_nb
    forward_dp = forward_dp_nb
    top2_stream = top2_stream_nb
else:
    site_grid = site_grid_np
    forward_dp = forward_dp_np
    top2_stream = top2_stream_np

# numpy's compiled convolution beats the loop version, so it is used in both
# modes; convolve_power_nb remains as an independent cross-check
convolve_power = convolve_power_np

BACKEND = "numba" if USE_NUMBA else "numpy"

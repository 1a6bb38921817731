import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

import oracles
from heavypoly.logmag import LogMagnitude
from heavypoly.walk_laws import EXACT_LIMIT, IncrementLaw, Overflow

CRIT = IncrementLaw.critical(-2.0)
LAWS = [
    CRIT,
    IncrementLaw.critical(-3.0),
    IncrementLaw.critical(1.0),
    IncrementLaw.log_tail(1.0),
    IncrementLaw.log_tail(0.5),
    IncrementLaw.loglog_tail(1.0),
    IncrementLaw.power_tail(2.0),
]
NN = IncrementLaw.nearest_neighbor()


# -- pmf ---------------------------------------------------------------------

@given(st.sampled_from(LAWS + [NN]), st.integers(min_value=0, max_value=10**12))
def test_pmf_symmetric(law, n):
    assert law.pmf(n) == law.pmf(-n)


def test_pmf_fixed_points():
    for law in LAWS:
        for n in (1, 7, 10**6):
            assert law.pmf(n) == law.pmf(-n) > 0
    assert NN.pmf(1) == 0.5 and NN.pmf(-1) == 0.5
    assert NN.pmf(0) == 0.0 and NN.pmf(2) == 0.0


def test_critical_pmf_at_one_matches_brute_force_constant():
    A = oracles.norm_const(CRIT)
    expected = A * math.log(math.log(4.0)) ** -2 / (4.0 * math.log(4.0) ** 2)
    assert CRIT.m0 == 3 and CRIT.k0 == 0.5
    assert CRIT.pmf(1) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: f"{l.family}{l.param:g}")
def test_unimodal_and_symmetric_on_wide_range(law):
    n = np.arange(-10**5, 10**5 + 1)
    p = law.pmf(n)
    assert np.array_equal(p, p[::-1])
    right = p[10**5:]
    assert np.all(np.diff(right) <= 0.0)
    assert np.all(p > 0)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: f"{l.family}{l.param:g}")
def test_normalisation_identity(law):
    for M in (1, 10, 1000, 10**6, 10**7):
        head = law.k0 + 2.0 * math.fsum(law.pmf(np.arange(1, M + 1)))
        assert head + 2.0 * law.tail(M + 1) == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: f"{l.family}{l.param:g}")
def test_pmf_equals_tail_difference(law):
    m = np.arange(1, 10**4 + 1)
    diff = law.tail(m) - law.tail(m + 1)
    np.testing.assert_allclose(diff, law.pmf(m), rtol=1e-6)


# -- tails -------------------------------------------------------------------

def test_tail_at_one_is_half_of_non_zero_mass():
    for law in LAWS + [NN]:
        assert law.tail(1) == pytest.approx((1.0 - law.k0) / 2.0, rel=1e-12)


@given(st.sampled_from(LAWS), st.integers(min_value=1, max_value=10**15))
def test_tail_monotone(law, n):
    assert law.tail(n) >= law.tail(n + 1)


def test_tail_monotone_across_crossover():
    n = np.arange(10**6 - 50, 10**6 + 50)
    for law in LAWS:
        assert np.all(np.diff(law.tail(n)) <= 0.0)


def test_critical_tail_matches_brute_force_sum():
    assert CRIT.tail(10**4) == pytest.approx(oracles.brute_tail(CRIT, 10**4), rel=1e-6)


def test_tail_beyond_crossover_matches_brute_force_sum():
    law = IncrementLaw.log_tail(1.0)
    n = 5 * 10**7
    assert law.tail(n) == pytest.approx(oracles.brute_tail(law, n), rel=1e-6)


# -- entropy -----------------------------------------------------------------

def test_entropy_nearest_neighbor_is_log2():
    res = NN.entropy()
    assert res.finite and res.value == pytest.approx(math.log(2.0), abs=1e-15)


@pytest.mark.parametrize("alpha,finite", [(-3, True), (-2, True), (-1.5, True),
                                          (-1, False), (0, False), (1, False)])
def test_entropy_dichotomy(alpha, finite):
    res = IncrementLaw.critical(alpha).entropy(tol=1e-4)
    assert res.finite is finite
    if finite:
        assert res.width < 1e-4
        assert res.lower <= res.value <= res.upper
    else:
        assert res.upper == math.inf


def test_entropy_matches_brute_force():
    res = CRIT.entropy(tol=1e-6)
    assert res.value == pytest.approx(oracles.brute_entropy_critical(CRIT), abs=1e-6)


def test_entropy_power_tail_against_partial_sum():
    law = IncrementLaw.power_tail(2.0)
    m = np.arange(1, 10**7 + 1)
    lk = law.log_pmf(m)
    direct = -law.k0 * math.log(law.k0) + 2.0 * math.fsum(-np.exp(lk) * lk)
    # the tail beyond 1e7 is below 1e-12 for a = 2
    assert law.entropy().value == pytest.approx(direct, abs=1e-10)


def test_entropy_rejects_bad_tol():
    with pytest.raises(ValueError):
        CRIT.entropy(tol=0.0)


# -- quantiles ---------------------------------------------------------------

def test_quantile_zero_on_atom():
    assert CRIT.quantile_logmag(0.3).sign == 0
    assert CRIT.quantile_logmag(CRIT.k0).sign == 0
    assert CRIT.quantile_logmag(CRIT.k0 + 1e-6) == LogMagnitude.from_int(1)


def test_quantile_round_trip_with_oracle_cdf():
    x = 10**4
    u = 1.0 - 2.0 * oracles.brute_tail(CRIT, x + 1)
    q = CRIT.quantile_logmag(u)
    assert q.is_exact and q.to_int() == x


@settings(max_examples=200)
@given(st.integers(min_value=0, max_value=10**8))
def test_quantile_inverts_cdf_exactly(x):
    u = CRIT.cdf(x)
    assert CRIT.quantile_logmag(u).to_int() == x


@settings(max_examples=200)
@given(st.floats(min_value=0.5005, max_value=CRIT.cdf(10**8)))
def test_cdf_of_quantile_within_one_step(u):
    x = CRIT.quantile_logmag(u).to_int()
    assert CRIT.cdf(x) >= u * (1 - 1e-12)
    if x > 0:
        assert CRIT.cdf(x - 1) < u * (1 + 1e-12)


def test_deep_quantile_critical_alpha_zero():
    law = IncrementLaw.critical(0.0)
    A = oracles.norm_const(law)
    # relaxed tail: P[|X| > x] = 2 A / log(x + m0 + 1) for alpha = 0
    target = 1e-3
    ln_x = optimize.brentq(lambda t: 2.0 * A / math.log(math.exp(t) + law.m0 + 1) - target
                           if t < 700 else 2.0 * A / t - target, 1.0, 5000.0, xtol=1e-14)
    q = law.quantile_logmag(1.0 - target)
    assert not q.is_exact
    assert float(q.lnmag) == pytest.approx(ln_x, abs=1e-6)
    assert float(q.lnmag) == pytest.approx(2e3 * A, rel=1e-3)


def test_quantile_rejects_outside_unit_interval():
    for u in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            CRIT.quantile_logmag(u)


def test_quantile_monotone_in_u():
    u = np.sort(np.random.default_rng(3).random(2000))
    x, lnmag = CRIT.upper_quantile(1.0 - u)
    key = lnmag.copy()
    key[x == 0] = -np.inf
    key[x > 0] = np.log(x[x > 0])
    assert np.any(x < 0) and np.any(x > 0)
    assert np.all(key[1:] >= key[:-1])


# -- sampling ----------------------------------------------------------------

def test_sampling_deterministic():
    a = CRIT.sample_exact(np.random.default_rng(5), size=1000)
    b = CRIT.sample_exact(np.random.default_rng(5), size=1000)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_nearest_neighbor_sampling(rng):
    v, over = NN.sample_exact(rng, size=10**6)
    assert not over.any()
    f = np.mean(v == 1)
    assert abs(f - 0.5) <= 4 * math.sqrt(0.25 / 10**6)
    assert set(np.unique(v)) == {-1, 1}


def test_zero_frequency_matches_atom(rng):
    v, over = CRIT.sample_exact(rng, size=10**6)
    f = np.mean((v == 0) & ~over)
    se = math.sqrt(CRIT.k0 * (1 - CRIT.k0) / 10**6)
    assert abs(f - CRIT.k0) <= 4 * se


def test_empirical_pmf_per_bin(rng):
    n = 10**6
    v, over = CRIT.sample_exact(rng, size=n)
    for k in range(-20, 21):
        p = CRIT.pmf(k)
        f = np.mean((v == k) & ~over)
        assert abs(f - p) <= 4 * math.sqrt(p * (1 - p) / n), k


def test_ks_against_analytic_cdf(rng):
    n = 10**5
    v, over = CRIT.sample_exact(rng, size=n)
    a = np.sort(np.abs(v[~over]))
    support = np.unique(a)
    emp = np.searchsorted(a, support, side="right") / n
    d = np.max(np.abs(emp - CRIT.cdf(support)))
    # the continuous 1% critical value is conservative for a discrete law
    assert d < 1.628 / math.sqrt(n)


def test_overflow_marker():
    rng = np.random.default_rng(0)
    law = IncrementLaw.log_tail(0.5)
    draws = [law.sample_exact(rng, cap=10) for _ in range(2000)]
    assert any(d is Overflow for d in draws)
    assert all(d is Overflow or abs(d) <= 10 for d in draws)
    assert pickle.loads(pickle.dumps(Overflow)) is Overflow
    with pytest.raises(ValueError):
        law.sample_exact(rng, cap=0)


# -- s_n and condition (c) ---------------------------------------------------

def test_s_n_when_threshold_exceeds_tail():
    assert math.log(3) ** 2 / 3 >= CRIT.tail(1)
    assert CRIT.s_n(3) == 1


def test_s_n_power_tail_direct_search():
    law = IncrementLaw.power_tail(2.0)
    thr = math.log(1000) ** 2 / 1000
    s = 1
    while oracles.brute_tail(law, s, limit=10**5) > thr:
        s += 1
    assert law.s_n(1000) == s


def test_s_n_monotone_beyond_threshold_peak():
    # (log n)^2 / n decreases for n > e^2
    for law in LAWS:
        vals = [law.s_n(n) for n in range(10, 5000, 37)]
        keys = [LogMagnitude.from_int(v) if isinstance(v, int) else v for v in vals]
        assert all(a <= b for a, b in zip(keys, keys[1:]))


def test_s_n_large_is_logmagnitude():
    s = IncrementLaw.log_tail(0.5).s_n(10**4)
    assert isinstance(s, LogMagnitude) and float(s.lnmag) > math.log(EXACT_LIMIT)


def test_condition_c_loglog_passes():
    ratio, ok = IncrementLaw.loglog_tail(1.0).condition_c_ratio(10**4, 0.6)
    assert ok and 0 < ratio <= 10**4 ** -0.6


def test_condition_c_power_tail_fails():
    law = IncrementLaw.power_tail(1.0)
    n = 10**4
    ratio, ok = law.condition_c_ratio(n, 0.9)
    assert not ok
    s = law.s_n(n)
    t = lambda k: oracles.brute_tail(law, k, limit=10**7)  # noqa: E731
    assert ratio == pytest.approx((t(s + 1) - t(2 * n * s)) / t(s), rel=1e-6)
    assert abs(ratio - (1 - 1 / (2 * n))) <= 2.0 / s


def test_condition_c_degenerate_ratio_zero():
    ratio, ok = NN.condition_c_ratio(100, 0.75)
    assert ratio == 0.0 and ok


def test_condition_c_rejects_small_gamma():
    with pytest.raises(ValueError):
        CRIT.condition_c_ratio(100, 0.5)


# -- construction ------------------------------------------------------------

def test_config_round_trip():
    for law in LAWS + [NN]:
        assert IncrementLaw.from_config(law.to_config()) == law


@pytest.mark.parametrize("bad", [
    dict(family="log_tail", a=1.5), dict(family="power_tail", a=0.0),
    dict(family="critical", alpha=-2, m0=2), dict(family="critical", alpha=5, m0=3),
    dict(family="critical", alpha=-2, k0=0.0), dict(family="critical", alpha=-2, k0=0.001),
    dict(family="nope"),
])
def test_invalid_laws_rejected(bad):
    with pytest.raises(ValueError):
        IncrementLaw.from_config(bad)


def test_critical_m0_makes_shape_monotone():
    for alpha in (-3, -2, 0, 1, 2, 5):
        law = IncrementLaw.critical(alpha)
        p = law.pmf(np.arange(1, 5000))
        assert np.all(np.diff(p) <= 0)
        if law.m0 > 3:
            with pytest.raises(ValueError):
                IncrementLaw.critical(alpha, m0=law.m0 - 1)


def test_pickle_drops_tables():
    law = IncrementLaw.critical(-2.0)
    law.tail(5)
    blob = pickle.dumps(law)
    assert len(blob) < 10_000
    back = pickle.loads(blob)
    assert back == law and back.tail(5) == law.tail(5)

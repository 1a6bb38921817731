import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from heavypoly import _kernels
from heavypoly.environment import Bernoulli, DiscreteFinite, Gaussian
from heavypoly.errors import ContractViolation
from heavypoly.lattice_field import LatticeField
from heavypoly.partition import (PolymerConfig, exact_W, free_energy_gap, martingale_check,
                                 mean_W_mc, ring_kernel, transfer_matrix, truncated_kernel,
                                 window_change_bound)
from heavypoly.walk_laws import IncrementLaw

CRIT = IncrementLaw.critical(-2.0)
NN = IncrementLaw.nearest_neighbor()
DISC = DiscreteFinite([(-1.0, 0.3), (0.5, 0.5), (2.0, 0.2)])


def test_beta_zero_gives_ones():
    cfg = PolymerConfig(0.0, 12, 5, CRIT, Gaussian(), seed=3)
    tr = exact_W(cfg)
    assert np.array_equal(tr.w, np.ones(12))


def test_kernel_tables():
    for law, M in ((CRIT, 1), (CRIT, 7), (NN, 3)):
        k, lost = truncated_kernel(law, M)
        assert k.size == 4 * M + 1 and math.fsum(k) == pytest.approx(1.0, abs=1e-15)
        assert lost == pytest.approx(2 * law.tail(2 * M + 1))
        assert np.array_equal(k, k[::-1])
        t = transfer_matrix(law, M)
        np.testing.assert_allclose(t.sum(axis=0), 1.0, atol=1e-15)
        np.testing.assert_allclose(ring_kernel(law, M), oracles.ring_transition(law, M), rtol=1e-14)


def test_two_steps_nearest_neighbor_enumeration():
    cfg = PolymerConfig(0.8, 2, 2, NN, DISC, seed=17)
    fld = cfg.field()
    got = exact_W(cfg, fld).final
    lam = DISC.lam(0.8)
    total = 0.0
    for a in (-1, 1):
        for b in (-1, 1):
            total += 0.25 * math.exp(0.8 * fld.value(1, a) - lam) * math.exp(0.8 * fld.value(2, a + b) - lam)
    assert got == pytest.approx(total, rel=1e-12)


def test_mp_backward_recursion_n8_m6():
    cfg = PolymerConfig(1.3, 8, 6, CRIT, Gaussian(), seed=41)
    fld = cfg.field()
    ref = oracles.mp_backward_W(1.3, 8, 6, CRIT, Gaussian(), fld)
    tr = exact_W(cfg, fld)
    assert tr.final == pytest.approx(float(ref), rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.floats(0.0, 3.0), st.integers(0, 2**63 - 1),
       st.sampled_from(["crit", "nn", "power"]), st.sampled_from(["gauss", "bern", "disc"]))
def test_matches_path_enumeration(N, M, beta, seed, lname, ename):
    law = {"crit": CRIT, "nn": IncrementLaw.nearest_neighbor(0.2), "power": IncrementLaw.power_tail(1.0)}[lname]
    env = {"gauss": Gaussian(), "bern": Bernoulli(0.4), "disc": DISC}[ename]
    cfg = PolymerConfig(beta, N, M, law, env, seed)
    fld = cfg.field()
    tr = exact_W(cfg, fld)
    ref = oracles.enumerate_W(beta, N, M, law, env, fld)
    assert tr.final == pytest.approx(ref, rel=1e-10)


def test_every_prefix_matches_enumeration():
    cfg = PolymerConfig(1.0, 4, 2, CRIT, Bernoulli(0.5), seed=9)
    fld = cfg.field()
    tr = exact_W(cfg, fld)
    for n in range(1, 5):
        assert tr.w[n - 1] == pytest.approx(oracles.enumerate_W(1.0, n, 2, CRIT, cfg.env, fld), rel=1e-10)


def test_logz_consistency():
    cfg = PolymerConfig(2.0, 30, 10, CRIT, Gaussian(), seed=1)
    tr = exact_W(cfg)
    n = np.arange(1, 31)
    np.testing.assert_allclose(tr.logZ, np.log(tr.w) + n * cfg.env.lam(2.0), rtol=1e-10, atol=1e-10)
    assert np.all(tr.w > 0)


def test_large_beta_does_not_overflow():
    cfg = PolymerConfig(5.0, 1000, 8, CRIT, Gaussian(), seed=2)
    tr = exact_W(cfg)
    assert np.all(np.isfinite(tr.log_w))


def test_shift_covariance():
    c = 0.75
    shifted = DiscreteFinite([(v + c, p) for v, p in DISC.atoms])
    beta, N = 1.2, 9
    a = PolymerConfig(beta, N, 4, CRIT, DISC, seed=5)
    b = PolymerConfig(beta, N, 4, CRIT, shifted, seed=5)
    ta, tb = exact_W(a), exact_W(b)
    np.testing.assert_allclose(tb.w, ta.w, rtol=1e-9)
    assert tb.logZ[-1] - ta.logZ[-1] == pytest.approx(beta * c * N, rel=1e-9)


def test_window_change_within_bound():
    for M, M_big, N in ((4, 9, 5), (6, 12, 8)):
        small = PolymerConfig(0.6, N, M, CRIT, Bernoulli(0.3), seed=8)
        big = PolymerConfig(0.6, N, M_big, CRIT, Bernoulli(0.3), seed=8)
        fld = small.field()
        delta = abs(exact_W(small, fld).final - exact_W(big, fld).final)
        assert delta <= window_change_bound(small, M_big)
    with pytest.raises(ValueError):
        window_change_bound(PolymerConfig(1.0, 3, 3, CRIT, Gaussian()), 5)


@pytest.mark.parametrize("dp", [_kernels.forward_dp_np, _kernels.forward_dp_nb], ids=["numpy", "numba"])
def test_forward_dp_backends(dp):
    rng = np.random.default_rng(0)
    t = np.ascontiguousarray(transfer_matrix(CRIT, 6))
    w = rng.random((20, 13)) + 0.1
    init = np.zeros(13)
    init[6] = 1.0
    ref_tot, ref_row, ref_scale = _kernels.forward_dp_np(t, w, init)
    tot, row, scale = dp(t, w, init)
    np.testing.assert_allclose(tot, ref_tot, rtol=1e-13)
    np.testing.assert_allclose(row * math.exp(scale - ref_scale), ref_row, rtol=1e-12)
    # unscaled product for comparison
    a = init.copy()
    for n in range(20):
        a = (t @ a) * w[n]
    assert math.exp(tot[-1]) == pytest.approx(a.sum(), rel=1e-12)


def test_mean_w_beta_zero():
    assert mean_W_mc(PolymerConfig(0.0, 5, 3, CRIT, Gaussian()), 10) == (1.0, 0.0)
    assert free_energy_gap(PolymerConfig(0.0, 5, 3, CRIT, Gaussian()), 10) == (0.0, 0.0)


def test_mean_w_bernoulli(rng):
    cfg = PolymerConfig(1.0, 8, 8, CRIT, Bernoulli(0.3), seed=12345)
    m, se = mean_W_mc(cfg, 2000)
    assert abs(m - 1.0) <= 3 * se


def test_worker_count_does_not_change_results():
    cfg = PolymerConfig(1.0, 10, 6, CRIT, Gaussian(), seed=3)
    assert mean_W_mc(cfg, 16, workers=1) == mean_W_mc(cfg, 16, workers=2)


def test_replicas_precondition():
    with pytest.raises(ValueError):
        mean_W_mc(PolymerConfig(1.0, 5, 3, CRIT, Gaussian()), 1)
    with pytest.raises(ValueError):
        free_energy_gap(PolymerConfig(1.0, 5, 3, CRIT, Gaussian()), 1)


def test_martingale_check_cases():
    assert martingale_check(PolymerConfig(0.0, 3, 2, CRIT, Bernoulli(0.5))) == 0.0
    assert martingale_check(PolymerConfig(1.0, 2, 2, CRIT, Bernoulli(0.5)), replicas=4) <= 1e-10
    det = DiscreteFinite([(0.7, 1.0)])
    assert martingale_check(PolymerConfig(1.0, 4, 3, CRIT, det), replicas=2) <= 1e-15
    tr = exact_W(PolymerConfig(1.0, 4, 3, CRIT, det))
    np.testing.assert_allclose(tr.w, 1.0, rtol=1e-14)
    with pytest.raises(ValueError):
        martingale_check(PolymerConfig(1.0, 2, 2, CRIT, Gaussian()))
    with pytest.raises(ValueError):
        martingale_check(PolymerConfig(1.0, 5, 2, CRIT, Bernoulli(0.5)))


def test_field_env_mismatch_rejected():
    cfg = PolymerConfig(1.0, 3, 2, CRIT, Gaussian())
    with pytest.raises(ValueError):
        exact_W(cfg, LatticeField(0, Bernoulli(0.5)))


def test_config_validation():
    for kw in (dict(beta=-1.0, N=2, M=2), dict(beta=1.0, N=0, M=2), dict(beta=1.0, N=2, M=0)):
        with pytest.raises(ValueError):
            PolymerConfig(law=CRIT, env=Gaussian(), **kw)

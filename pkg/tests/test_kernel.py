import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from axialsig.kernel import (KernelError, KernelIndex, beta_std, check_fast_decay,
                             fast_decay_envelope, log_norm_const, log_rho, log_rho_array, rho,
                             rho_mode, stirling_threshold)


@pytest.mark.parametrize("k,l,s,expected", [
    (0, 0, 0.3, 1.0),
    (1, 0, 0.5, 1.0),  # 2s
    (1, 1, 0.5, 1.5),  # 6 s (1-s)
    (2, 0, 1.0, 3.0),  # 3 s^2
    (0, 3, 0.0, 4.0),  # 4 (1-s)^3
])
def test_rho_small_cases(k, l, s, expected):
    assert rho(KernelIndex(k, l), s) == pytest.approx(expected, rel=1e-14)


def test_rho_matches_scipy_beta_pdf():
    s = np.linspace(0.01, 0.99, 37)
    for k, l in [(0, 5), (7, 3), (120, 80), (400, 1)]:
        ours = np.exp(log_rho_array(k, l, s))
        ref = stats.beta(k + 1, l + 1).pdf(s)
        np.testing.assert_allclose(ours, ref, rtol=1e-11)


def test_log_rho_survives_factorial_overflow():
    # (1001)!/(500! 500!) is far outside double range; the log stays finite
    lr = log_rho(KernelIndex(500, 500), 0.5)
    assert math.isfinite(lr)
    assert lr == pytest.approx(math.log(stats.beta(501, 501).pdf(0.5)), rel=1e-12)


def test_endpoint_conventions():
    assert log_rho(KernelIndex(0, 4), 0.0) == pytest.approx(math.log(5.0))
    assert log_rho(KernelIndex(3, 0), 0.0) == -math.inf
    assert rho(KernelIndex(3, 2), 1.0) == 0.0


def test_rejects_bad_input():
    with pytest.raises(KernelError):
        KernelIndex(-1, 2)
    with pytest.raises(KernelError):
        log_rho(KernelIndex(1, 1), 1.2)
    with pytest.raises(KernelError):
        rho_mode(KernelIndex(0, 0))
    with pytest.raises(KernelError):
        fast_decay_envelope(10, 0.5)


def test_mode_and_std():
    assert rho_mode(KernelIndex(3, 7)) == 0.3
    a, b = 4.0, 8.0
    assert beta_std(3, 7) == pytest.approx(math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1))))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 300), st.integers(0, 300))
def test_rho_normalised_and_mean(k, l):
    f = lambda s: math.exp(log_rho_array(k, l, s))
    m = (k + 1) / (k + l + 2)
    sd = float(beta_std(k, l))
    pts = [max(0.0, m - 8 * sd), m, min(1.0, m + 8 * sd)]
    mass = integrate.quad(f, 0, 1, points=pts, limit=200)[0]
    mean = integrate.quad(lambda s: s * f(s), 0, 1, points=pts, limit=200)[0]
    assert mass == pytest.approx(1.0, abs=1e-9)
    assert mean == pytest.approx(m, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 2000), st.floats(0.0, 1.0))
def test_mode_is_maximum(n, u):
    k = int(round(u * n))
    s = np.linspace(0, 1, 513)
    lr = log_rho_array(k, n - k, s)
    assert log_rho_array(k, n - k, k / n) >= lr.max() - 1e-9


def test_log_norm_const_symmetry():
    k = np.arange(50)
    np.testing.assert_allclose(log_norm_const(k, 49 - k), log_norm_const(49 - k, k), rtol=1e-14)


def test_fast_decay_small_sweep_has_no_violations():
    rep = check_fast_decay([50, 200, 1000], 0.25, s_grid=2001)
    assert rep.total_violations == 0
    assert rep.empirical_n0 == 50
    assert all(r.worst_ratio <= 1.0 for r in rep.rows)
    assert rep.to_csv().splitlines()[0] == "n,epsilon0,worst_ratio,violations"


def test_fast_decay_holds_for_tiny_n():
    # the 3 n^1.5 prefactor dominates the Beta peak even at n = 1
    rep = check_fast_decay([1, 2, 3], 0.45, s_grid=1001)
    assert all(r.violations == 0 for r in rep.rows)


def test_fast_decay_envelope_value():
    assert fast_decay_envelope(100, 0.25) == pytest.approx(3 * 100 ** 1.5 * math.exp(-10 / 18))


def test_stirling_threshold():
    n0, failing = stirling_threshold(400)
    assert n0 == 0 and failing == []

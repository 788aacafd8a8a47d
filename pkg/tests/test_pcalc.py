import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pelliptic import coeff, pcalc


def _random_mu(rng, d, imag=0.5):
    while True:
        A = np.eye(d) + 0.3 * rng.normal(size=(d, d)) + 1j * imag * rng.normal(size=(d, d))
        if coeff.hermitian_min_eig(A[None])[0] > 0.05:
            return A


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10 ** 6), p=st.floats(1.1, 20.0))
def test_form_matrix_matches_complex_arithmetic(seed, p):
    rng = np.random.default_rng(seed)
    mu = _random_mu(rng, 3)
    a, b = rng.normal(size=3), rng.normal(size=3)
    lhs = pcalc.local_form(mu, p)(a, b)
    rhs = pcalc.form_value(mu, p, a + 1j * b)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_delta_2_is_ellipticity_of_real_part():
    rng = np.random.default_rng(0)
    A = np.eye(3) + 0.2 * rng.normal(size=(3, 3))
    A = A + A.T
    f = coeff.make_constant(A)
    assert pcalc.delta_p(f, 2.0) == pytest.approx(np.linalg.eigvalsh(A)[0], abs=1e-12)


def test_duality():
    f = coeff.make_constant(_random_mu(np.random.default_rng(3), 3))
    for p in (1.5, 3.0, 7.0):
        q = pcalc.conjugate_exponent(p)
        assert pcalc.delta_p(f, p) == pytest.approx(pcalc.delta_p(f, q), abs=1e-12)


def test_delta_mu_scalar_and_real():
    assert pcalc.delta_mu(coeff.make_scalar_rotation(0.7, 3)) == pytest.approx(math.cos(0.7), abs=1e-14)
    assert pcalc.delta_mu(coeff.make_constant(np.diag([1.0, 2.0]))) == 1.0


def test_delta_mu_general_matrix_against_sampling():
    mu = _random_mu(np.random.default_rng(5), 2)
    val = pcalc.delta_mu_matrix(mu).value
    rng = np.random.default_rng(1)
    xi = rng.normal(size=(20000, 2)) + 1j * rng.normal(size=(20000, 2))
    mx = xi @ mu.T
    ratio = np.real(np.sum(mx * xi.conj(), 1)) / np.abs(np.sum(mx * xi, 1))
    assert val <= ratio.min() + 1e-9
    assert val >= ratio.min() - 1e-2


def test_p0_rotation_and_real():
    assert pcalc.p0(coeff.make_scalar_rotation(math.pi / 3, 3)) == pytest.approx(4.0, rel=1e-3)
    real = coeff.make_constant(np.array([[2.0, 0.5], [0.5, 1.0]]))
    assert pcalc.p0(real) == math.inf
    assert pcalc.analyticity_interval(math.inf, 3) == (1.0, math.inf)


def test_is_p_elliptic_boundary():
    f = coeff.make_scalar_rotation(math.pi / 3, 3)
    assert pcalc.is_p_elliptic(f, 3.9)
    assert not pcalc.is_p_elliptic(f, 4.0)


def test_interval_and_eps0():
    lo, hi = pcalc.analyticity_interval(4.0, 3)
    assert lo == pytest.approx(12 / 11, abs=1e-15)
    assert hi == pytest.approx(12.0, abs=1e-15)
    assert pcalc.eps0_lower(4.0, 3) == pytest.approx(1 / 12, abs=1e-15)
    assert pcalc.analyticity_interval(4.0, 2)[1] == math.inf
    with pytest.raises(ValueError):
        pcalc.analyticity_interval(2.0, 3)


def test_pc_threshold_closed_form():
    # sqrt(p-1)/(p-2) < 1/2  <=>  p > 4 + 2 sqrt(2)
    assert pcalc.pc_threshold(1.0, 1.0, 10.0) == pytest.approx(4 + 2 * math.sqrt(2), rel=1e-9)


def test_im_bound_detects_non_elliptic():
    f = coeff.make_scalar_rotation(1.4, 2)
    rep = pcalc.im_bound_check(f, 10.0)
    assert not rep.passes
    assert pcalc.delta_p(f, 10.0) < 0


def test_sector_angles():
    f = coeff.make_constant(np.array([[1.0, 0.0], [0.0, 2.0]]))
    ang = pcalc.sector_angles(f, 2.0, pcalc.delta_p(f, 2.0))
    assert ang.theta0 == pytest.approx(math.atan(4.0))
    assert ang.omega <= math.atan(2.0) + 1e-9
    assert ang.theta > math.pi / 2
    with pytest.raises(ValueError):
        pcalc.sector_angles(f, 2.0, 10.0)


def test_perturbation_bound_random():
    rng = np.random.default_rng(2)
    for _ in range(50):
        mu = _random_mu(rng, 2, 0.2)
        nu = 0.1 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        p = rng.uniform(1.2, 6)
        n = np.linalg.norm(nu, 2)
        lhs = pcalc.delta_p_matrices((mu + nu)[None], p)[0]
        rhs = pcalc.perturbed_delta_bound(pcalc.delta_p_matrices(mu[None], p)[0], p, n)
        assert lhs >= rhs - 1e-12


def test_build_report_summary():
    f = coeff.make_scalar_rotation(math.pi / 3, 3)
    rep = pcalc.build_report(f, [2, 3, 4, 6])
    s = rep.summary()
    assert s["p0"] == pytest.approx(4.0, rel=1e-3)
    assert s["p_low"] == pytest.approx(12 / 11, rel=1e-3)
    assert not s["omega_fallback"]
    assert rep.theta > math.pi / 2


def test_entrywise_conjugation_invariance():
    rng = np.random.default_rng(11)
    for _ in range(50):
        mu = _random_mu(rng, 3)
        for p in (2.5, 3.0, 4.0, 8.0):
            a = pcalc.delta_p_matrices(mu[None], p)[0]
            b = pcalc.delta_p_matrices(mu.conj()[None], p)[0]
            assert abs(a - b) <= 1e-12


def test_conjugate_transpose_preserves_sign():
    # the value itself changes under mu -> mu^H, p-ellipticity does not
    rng = np.random.default_rng(12)
    for _ in range(50):
        mu = _random_mu(rng, 3, imag=1.0)
        for p in (2.5, 3.0, 4.0, 8.0):
            a = pcalc.delta_p_matrices(mu[None], p)[0]
            b = pcalc.delta_p_matrices(mu.conj().T[None], p)[0]
            assert (a > 0) == (b > 0)

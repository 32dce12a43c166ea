from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, stats

from chaoslab.gausspoly import (
    ChaosVector,
    GaussPoly,
    chaos_project,
    evaluate,
    expectation,
    inner_product,
    poly_sum,
    variance,
)
from chaoslab.malliavin import (
    d_X,
    directional_derivative,
    gamma,
    hessian,
    malliavin_matrix,
    score_kernel,
    sharp_index,
    sharp_k,
)
from chaoslab.selftest import gamma_dx_residual
from chaoslab.testing import random_chaos

N1, N2, N3 = (GaussPoly.coordinate(i) for i in (1, 2, 3))
H2 = GaussPoly.hermite(2, 1)


def const(c):
    return GaussPoly.constant(c)


# gamma

def test_gamma_examples():
    assert gamma(N1 * N2, N1 * N2) == N1**2 + N2**2
    assert gamma(N1, N2).is_zero()
    assert expectation(gamma(H2, H2)) == pytest.approx(4.0)


def test_gamma_integration_by_parts():
    rng = np.random.default_rng(0)
    for _ in range(100):
        m = int(rng.integers(1, 5))
        F = random_chaos(rng, m)
        if F.is_zero():
            continue
        assert expectation(gamma(F, F)) == pytest.approx(m * inner_product(F, F), rel=1e-10)


def test_gamma_partition():
    rng = np.random.default_rng(1)
    for _ in range(20):
        F = random_chaos(rng, 3, max_index=6)
        G = random_chaos(rng, 2, max_index=6)
        full = gamma(F, G)
        parts = gamma(F, G, coords=range(1, 4)) + gamma(F, G, coords=range(4, 7))
        assert parts.allclose(full, rtol=1e-12, atol=1e-12)


# Malliavin matrix

def test_malliavin_matrix_examples():
    M = malliavin_matrix(ChaosVector.of([N1, N2]))
    assert M[0, 0] == const(1.0) and M[1, 1] == const(1.0)
    assert M[0, 1].is_zero() and M[1, 0].is_zero()
    M = malliavin_matrix([N1, N1**2])
    assert M[0, 0] == const(1.0)
    assert M[0, 1] == 2.0 * N1 and M[1, 0] == 2.0 * N1
    assert M[1, 1] == 4.0 * N1**2


def test_malliavin_matrix_symmetric_nonnegative_diagonal():
    rng = np.random.default_rng(2)
    for _ in range(50):
        V = [random_chaos(rng, int(rng.integers(1, 4))) for _ in range(3)]
        M = malliavin_matrix(V)
        assert M.is_symmetric()
        assert all(expectation(M[i, i]) >= 0.0 for i in range(3))


# Hessian

def test_hessian_examples():
    H = hessian(N1**2 * N2)
    assert H.shape == (2, 2)
    assert H[0, 0] == 2.0 * N2 and H[0, 1] == 2.0 * N1 and H[1, 1].is_zero()
    assert H.is_symmetric()
    Z = hessian(N1)
    assert Z.shape == (1, 1) and Z[0, 0].is_zero()


def test_hessian_of_quadratic_form():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((4, 4))
    A = (A + A.T) / 2
    F = poly_sum(GaussPoly.coordinate(i + 1) * GaussPoly.coordinate(j + 1) * A[i, j] for i in range(4) for j in range(4))
    H = hessian(F, 4)
    for i in range(4):
        for j in range(4):
            assert H[i, j].is_constant()
            assert expectation(H[i, j]) == pytest.approx(2 * A[i, j], rel=1e-12, abs=1e-12)


# directional derivatives

def test_directional_examples():
    assert directional_derivative(N1 * N2, [1.0, 0.0]) == N2
    c = 1.7
    assert directional_derivative(H2, [c]).allclose(2 * c * N1)


def test_directional_degree_drop():
    rng = np.random.default_rng(5)
    for _ in range(20):
        F = random_chaos(rng, 3)
        x = rng.standard_normal(4)
        D = directional_derivative(F, x)
        assert chaos_project(D, 3).is_zero()
        assert D.degree <= 2


def test_directional_dimension_mismatch():
    with pytest.raises(ValueError):
        directional_derivative(N3, [1.0, 2.0])
    with pytest.raises(ValueError):
        d_X(N3, np.ones((2, 2)))


def test_gamma_of_d_x():
    rng = np.random.default_rng(6)
    for _ in range(20):
        F = random_chaos(rng, 3, max_index=4)
        X = rng.standard_normal((4, 2))
        assert gamma_dx_residual(F, X)


# sharp operators

def test_sharp_examples():
    off = 10
    G11 = GaussPoly.coordinate(sharp_index(1, 1, 1, off))
    assert sharp_k(H2, 1, off).allclose(2.0 * N1 * G11)
    assert sharp_k(const(3.0), 1, off).is_zero()
    F = N1 * N2 * N3
    assert variance(sharp_k(F, 2, 10)) == pytest.approx(6.0)


def test_sharp_layout_and_collision():
    assert sharp_index(1, 1, 3, 10) == 10
    assert sharp_index(2, 3, 3, 10) == 15
    with pytest.raises(ValueError):
        sharp_k(N1 * N3, 1, fresh_offset=3)
    with pytest.raises(ValueError):
        sharp_k(N1, 0, fresh_offset=5)


def test_sharp_variance_identity():
    rng = np.random.default_rng(7)
    for m in range(1, 5):
        for k in range(1, m + 1):
            F = random_chaos(rng, m, terms=3)
            S = sharp_k(F, k, fresh_offset=F.max_index + 1)
            falling = math.prod(range(m - k + 1, m + 1))
            assert variance(S) == pytest.approx(falling * variance(F), rel=1e-10)


def test_fourier_laplace_identity():
    rng = np.random.default_rng(8)
    draws = 200_000
    for _ in range(4):
        F = random_chaos(rng, int(rng.integers(1, 4)), max_index=3, terms=3)
        K = F.max_index
        S = sharp_k(F, 1, fresh_offset=K + 1)
        g = gamma(F, F)
        X = rng.standard_normal((draws, K + K))
        s, gv = evaluate(S, X), evaluate(g, X)
        for t in (0.5, 1.0, 2.0):
            a = np.cos(t * s)
            b = np.exp(-0.5 * t * t * gv)
            se = math.sqrt(a.var() / draws + b.var() / draws)
            assert abs(a.mean() - b.mean()) <= 5 * se
            assert abs(np.sin(t * s).mean()) <= 5 * np.sin(t * s).std() / math.sqrt(draws) + 1e-12


# score kernel

def test_score_kernel_second_hermite():
    Z = score_kernel(H2, 2)
    x = np.linspace(-3, 3, 13)[:, None]
    x = x[np.abs(x[:, 0]) > 0.1]
    np.testing.assert_allclose(Z.evaluate(x), (x[:, 0] ** 2 + 1) / (2 * x[:, 0] ** 2), rtol=1e-12)


def test_score_kernel_matches_chi_square_score():
    # conditional on F = x, N^2 = x + 1 so Z is a function of F alone
    Z = score_kernel(H2, 2)
    y = np.array([-0.5, 0.0, 0.7, 3.0])
    N = np.sqrt(y + 1)[:, None]
    shift = stats.chi2(df=1, loc=-1)
    h = 1e-6
    score = -(shift.logpdf(y + h) - shift.logpdf(y - h)) / (2 * h)
    np.testing.assert_allclose(Z.evaluate(N), score, rtol=1e-6)
    np.testing.assert_allclose(Z.evaluate(N), (y + 2) / (2 * (y + 1)), rtol=1e-12)


def test_score_kernel_first_chaos():
    Z = score_kernel(N1, 1)
    x = np.random.default_rng(0).standard_normal((10, 1))
    np.testing.assert_allclose(Z.evaluate(x), x[:, 0])


def test_score_kernel_constant_rejected():
    with pytest.raises(ValueError):
        score_kernel(const(1.0), 1)


def test_score_kernel_denominator_positive():
    rng = np.random.default_rng(9)
    F = random_chaos(rng, 2, max_index=3)
    Z = score_kernel(F, 2)
    X = rng.standard_normal((10_000, 3))
    assert np.all(evaluate(Z.denominator, X) > 0)


def _bump(x, c, r):
    """Smooth bump supported on ``|x - c| < r`` and its derivative."""
    u = (x - c) / r
    inside = np.abs(u) < 1
    phi = np.zeros_like(x)
    dphi = np.zeros_like(x)
    w = 1 - u[inside] ** 2
    phi[inside] = np.exp(-1 / w)
    dphi[inside] = phi[inside] * (-2 * u[inside] / w**2) / r
    return phi, dphi


def test_score_kernel_integration_by_parts():
    # Z is singular where Gamma vanishes (N = 0, i.e. F = -1.7), so the bumps stay clear of it
    rng = np.random.default_rng(10)
    F = (N1**2 - 1.0) + 0.5 * N1 * N2 + (N2**2 - 1.0) * 0.7
    Z = score_kernel(F, 2)
    X = rng.standard_normal((1_000_000, 2))
    f, z = evaluate(F, X), Z.evaluate(X)
    for c in (-1.0, -0.3, 0.0, 0.8, 2.0):
        phi, dphi = _bump(f, c, 0.5)
        d = dphi - z * phi
        assert abs(d.mean()) <= 5 * d.std() / math.sqrt(f.size)


def test_score_kernel_bump_expectation_by_quadrature():
    # E[Phi'(F)] for F = H_2(N1) by quadrature against the Gaussian density
    Z = score_kernel(H2, 2)
    rng = np.random.default_rng(11)
    x = rng.standard_normal((2_000_000, 1))
    f, z = x[:, 0] ** 2 - 1, Z.evaluate(x)
    for c in (0.0, 1.0, 2.5):
        r = 0.8

        def integrand(u):
            _, d = _bump(np.array([u * u - 1]), c, r)
            return d[0] * stats.norm.pdf(u)

        lo = math.sqrt(max(c - r + 1, 0.0))
        hi = math.sqrt(c + r + 1)
        exact = 2 * integrate.quad(integrand, lo, hi, epsabs=1e-13)[0]
        phi, _ = _bump(f, c, r)
        b = z * phi
        assert abs(b.mean() - exact) <= 5 * b.std() / math.sqrt(f.size)

"""Quick invariant suites behind ``chaoslab selftest``."""
from __future__ import annotations

import math

import numpy as np

from .gausspoly import chaos_project, expectation, from_wick, inner_product, poly_sum, to_wick, variance
from .malliavin import d_X, gamma, hessian, malliavin_matrix, sharp_k
from .spectral import (
    SymmetricSpectrum,
    cauchy_binet_Rq,
    negative_moment_quadrature,
    remainder_bounds_report,
    remainder_Rq,
)
from .testing import random_chaos, random_poly, random_spectrum, random_symmetric


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def check_wick_round_trip(rng, cases):
    for _ in range(cases):
        F = random_poly(rng)
        if not from_wick(to_wick(F)).allclose(F, rtol=1e-12, atol=1e-12):
            return False, f"round trip failed on {F!r}"
    return True, f"{cases} cases"


def check_orthogonality(rng, cases):
    worst = 0.0
    for _ in range(cases):
        F, G = random_poly(rng), random_poly(rng)
        for j in range(5):
            for k in range(5):
                if j != k:
                    worst = max(worst, abs(inner_product(chaos_project(F, j), chaos_project(G, k))))
    return worst <= 1e-12, f"max |<J_j F, J_k G>| = {worst:.2e}"


def check_gamma_mean(rng, cases):
    worst = 0.0
    for _ in range(cases):
        m = int(rng.integers(1, 5))
        F = random_chaos(rng, m)
        if F.is_zero():
            continue
        lhs = m * inner_product(F, F)
        worst = max(worst, _rel(lhs, expectation(gamma(F, F))))
    return worst <= 1e-10, f"max rel err {worst:.2e}"


def check_sharp_variance(rng, cases):
    worst = 0.0
    for _ in range(cases):
        m = int(rng.integers(1, 5))
        k = int(rng.integers(1, m + 1))
        F = random_chaos(rng, m, terms=3)
        if F.is_zero():
            continue
        S = sharp_k(F, k, fresh_offset=F.max_index + 1)
        falling = math.prod(range(m - k + 1, m + 1))
        worst = max(worst, _rel(variance(S), falling * variance(F)))
    return worst <= 1e-10, f"max rel err {worst:.2e}"


def gamma_dx_residual(F, X) -> bool:
    """``Gamma(D_X F) == B^T B`` with ``B = hess(F) X``, coefficientwise."""
    K = X.shape[0]
    H = hessian(F, K)
    d = X.shape[1]
    B = [[poly_sum(H[i, k].scale(X[k, a]) for k in range(K) if X[k, a] != 0.0) for a in range(d)] for i in range(K)]
    G = malliavin_matrix(d_X(F, X))
    for a in range(d):
        for b in range(d):
            BtB = poly_sum(B[i][a] * B[i][b] for i in range(K))
            if not G[a, b].allclose(BtB, rtol=1e-10, atol=1e-10):
                return False
    return True


def check_gamma_dx(rng, cases):
    for _ in range(cases):
        F = random_poly(rng)
        K = max(F.max_index, 1)
        X = rng.standard_normal((K, int(rng.integers(1, 4))))
        if not gamma_dx_residual(F, X):
            return False, f"mismatch on {F!r}"
    return True, f"{cases} cases"


def check_cauchy_binet(rng, cases):
    worst = 0.0
    for _ in range(cases):
        size = int(rng.integers(2, 9))
        A = random_symmetric(rng, size)
        q = int(rng.integers(1, size + 1))
        worst = max(worst, _rel(cauchy_binet_Rq(A, q), remainder_Rq(SymmetricSpectrum.from_matrix(A), q)))
    return worst <= 1e-9, f"max rel err {worst:.2e}"


def check_remainder_chains(rng, cases):
    worst = math.inf
    for _ in range(cases):
        s = SymmetricSpectrum.from_values(random_spectrum(rng, int(rng.integers(2, 10))))
        for q in (2, 3, 4):
            r = remainder_bounds_report(s, q)
            scale = max(r.Rq, 1.0)
            worst = min(worst, r.min_slack() / scale)
    return worst >= -1e-9, f"min relative slack {worst:.2e}"


def check_quadrature(rng, cases):
    worst = 0.0
    for k in range(3, 11):
        r = negative_moment_quadrature(SymmetricSpectrum.from_values([0.5] * k), 1)
        worst = max(worst, _rel(r.value, 1.0 / (k - 2)))
    for _ in range(cases):
        size = int(rng.integers(1, 9))
        zeros = int(rng.integers(0, size + 1))
        lam = random_spectrum(rng, size, zeros)
        q = int(rng.integers(1, 4))
        r = negative_moment_quadrature(SymmetricSpectrum.from_values(lam), q)
        if r.divergent != (np.count_nonzero(lam) <= 2 * q):
            return False, f"divergence flag wrong for {lam} q={q}"
    return worst <= 1e-6, f"max rel err vs 1/(k-2): {worst:.2e}"


SUITES = (
    ("wick-round-trip", check_wick_round_trip),
    ("chaos-orthogonality", check_orthogonality),
    ("gamma-mean", check_gamma_mean),
    ("sharp-variance", check_sharp_variance),
    ("gamma-of-D_X", check_gamma_dx),
    ("cauchy-binet", check_cauchy_binet),
    ("remainder-inequalities", check_remainder_chains),
    ("negative-moment-quadrature", check_quadrature),
)


def run_selftest(cases: int = 50, seed: int = 0):
    out = []
    for name, fn in SUITES:
        rng = np.random.default_rng([seed, len(out)])
        ok, detail = fn(rng, cases)
        out.append((name, bool(ok), detail))
    return out

"""Brute-force reference computations, independent of the main code paths.

Each oracle uses a different route from the implementation it checks:
tensor Gauss-Hermite quadrature for Wick expectations, scipy quadrature for
negative moments, explicit chi-square densities for the second-chaos family
and classical Wishart/chi-square formulas.  ``chaoslab oracle <name>``
prints these tables.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import integrate, stats
from scipy.special import gammaln


def gauss_hermite_expectation(f, dim: int, nodes: int = 12) -> float:
    """``E f(N_1..N_dim)`` by tensor Gauss-Hermite quadrature (exact for degree < 2*nodes)."""
    x, w = hermegauss(nodes)
    w = w / math.sqrt(2.0 * math.pi)
    total = 0.0
    for idx in itertools.product(range(nodes), repeat=dim):
        pt = x[list(idx)]
        total += float(np.prod(w[list(idx)])) * f(pt)
    return total


def inverse_chi2_mean(k: int) -> float:
    """``E[1/chi^2_k] = 1/(k-2)``."""
    return 1.0 / (k - 2)


def negative_moment_integral(lams, q: int) -> float:
    """``(1/(q-1)!) int_0^inf s^(q-1) prod (1+8 s lambda^2)^(-1/2) ds`` by scipy quad."""
    mu = np.asarray(lams, dtype=float) ** 2
    f = lambda s: s ** (q - 1) * float(np.prod((1.0 + 8.0 * s * mu) ** -0.5))
    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=500)
    return val / math.factorial(q - 1)


def family_negative_moment(n: int, q: int) -> float:
    """``E[Gamma^-q]`` for the default family: ``Gamma = (2/n) chi^2_n``."""
    # E[(chi^2_n)^-q] = Gamma(n/2 - q) / (2^q Gamma(n/2))
    if n <= 2 * q:
        return math.inf
    return (n / 2.0) ** q * math.exp(gammaln(n / 2.0 - q) - gammaln(n / 2.0)) / 2.0**q


def _chi2_derivs(y, k):
    """Chi-square density and its first two derivatives at ``y > 0``."""
    g = stats.chi2.pdf(y, k)
    a = k / 2.0 - 1.0
    u = a / y - 0.5
    return g, g * u, g * (u * u - a / (y * y))


def family_density_distance(n: int, q: int, lo: float = -5.0, hi: float = 5.0, step: float = 0.001) -> float:
    """Exact ``sup |f^(q) - phi^(q)|`` over ``[lo, hi]`` for ``F = (chi^2_n - n)/sqrt(2n)``."""
    x = np.arange(lo, hi + step / 2, step)
    s = math.sqrt(2.0 * n)
    y = s * x + n
    f = np.zeros_like(x)
    pos = y > 0
    f[pos] = _chi2_derivs(y[pos], n)[q] * s ** (q + 1)
    phi = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    ref = [phi, -x * phi, (x * x - 1.0) * phi][q]
    return float(np.max(np.abs(f - ref)))


def family_entropy_fisher(n: int) -> tuple[float, float]:
    """Relative entropy and Fisher information of ``(chi^2_n - n)/sqrt(2n)`` by quadrature."""
    s = math.sqrt(2.0 * n)

    def ent(y):
        x = (y - n) / s
        logf = stats.chi2.logpdf(y, n) + math.log(s)
        return stats.chi2.pdf(y, n) * (logf + 0.5 * x * x + 0.5 * math.log(2 * math.pi))

    def fish(y):
        x = (y - n) / s
        score = s * ((n / 2.0 - 1.0) / y - 0.5)
        return stats.chi2.pdf(y, n) * (score + x) ** 2

    # the mass sits within a few sqrt(2n) of n; quad on [0, inf) can miss it
    lo, hi = max(0.0, n - 40.0 * s), n + 40.0 * s
    e, _ = integrate.quad(ent, lo, hi, points=[n], limit=1000, epsrel=1e-11)
    f, _ = integrate.quad(fish, lo, hi, points=[n], limit=1000, epsrel=1e-11)
    return e, f


def goe_p2_excess_kurtosis(n: int) -> float:
    """``tr(A^2) = (2/n) chi^2_{n(n+1)/2}``, excess kurtosis ``12/k``."""
    return 12.0 / (n * (n + 1) / 2.0)


def wishart_inverse_det_mean(n: int, p: int) -> float:
    """``E det(W/n)^{-1}`` for ``W ~ Wishart_p(n, I)``: ``n^p / prod_{i<=p} (n - i - 1)``."""
    return n**p / math.prod(n - i - 1 for i in range(1, p + 1))


def cauchy_binet_table(seed: int = 0, cases: int = 5, size: int = 5, q: int = 2) -> list[tuple[float, float]]:
    """``(sum of squared q-minors * q!, q! e_q(eigenvalues^2))`` pairs on fixed random symmetric matrices."""
    from .spectral import cauchy_binet_Rq, remainder_Rq, SymmetricSpectrum

    rng = np.random.default_rng(seed)
    out = []
    for _ in range(cases):
        M = rng.standard_normal((size, size))
        A = (M + M.T) / 2
        out.append((cauchy_binet_Rq(A, q), remainder_Rq(SymmetricSpectrum.from_matrix(A), q)))
    return out


ORACLES = {
    "quadrature": "E[Gamma^-1] for lambda = (1/2 x k): closed form 1/(k-2) and scipy quad",
    "family-negmom": "E[Gamma^-q] for the default second-chaos family (inverse chi-square moments)",
    "family-density": "sup |f^(q) - phi^(q)| for the default family (exact chi-square density)",
    "family-entropy": "relative entropy and Fisher information of the default family",
    "goe-kurtosis": "standardized fourth cumulant of tr(A^2) for GOE(n)",
    "wishart": "E det(A^-1) for A = B^T B / n, i.i.d. Gaussian B with p = 2",
    "cauchy-binet": "minor enumeration vs eigenvalue route on fixed random 5x5 matrices",
    "wick": "Gauss-Hermite expectations of sample polynomials",
}


def run_oracle(name: str) -> list[str]:
    lines = []
    if name == "quadrature":
        for k in range(3, 11):
            lines.append(f"k={k} closed={inverse_chi2_mean(k):.15g} quad={negative_moment_integral([0.5] * k, 1):.15g}")
    elif name == "family-negmom":
        for n in (10, 40, 160, 640):
            lines.append(f"n={n} q=1 {family_negative_moment(n, 1):.15g} q=2 {family_negative_moment(n, 2):.15g}")
    elif name == "family-density":
        for n in (10, 40, 160, 640):
            vals = " ".join(f"q={q} {family_density_distance(n, q):.6g}" for q in (0, 1, 2))
            lines.append(f"n={n} {vals}")
    elif name == "family-entropy":
        for n in (20, 80, 320):
            e, f = family_entropy_fisher(n)
            lines.append(f"n={n} entropy={e:.10g} fisher={f:.10g}")
    elif name == "goe-kurtosis":
        for n in (50, 200, 800):
            lines.append(f"n={n} {goe_p2_excess_kurtosis(n):.10g}")
    elif name == "wishart":
        for n in (20, 40, 80):
            lines.append(f"n={n} {wishart_inverse_det_mean(n, 2):.10g}")
    elif name == "cauchy-binet":
        for a, b in cauchy_binet_table():
            lines.append(f"minors={a:.15g} eigen={b:.15g}")
    elif name == "wick":
        cases = {
            "N1^4": (lambda x: x[0] ** 4, 1),
            "N1^2 N2^2": (lambda x: x[0] ** 2 * x[1] ** 2, 2),
            "(N1^2-1)^2": (lambda x: (x[0] ** 2 - 1) ** 2, 1),
            "(N1 N2 + N1^3)^2": (lambda x: (x[0] * x[1] + x[0] ** 3) ** 2, 2),
        }
        for label, (f, d) in cases.items():
            lines.append(f"E[{label}] = {gauss_hermite_expectation(f, d):.15g}")
    else:
        raise KeyError(f"unknown oracle {name!r}; choose from {', '.join(ORACLES)}")
    return lines

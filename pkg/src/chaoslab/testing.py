"""Random inputs for property checks: polynomials, pure-chaos elements, spectra."""
from __future__ import annotations

import numpy as np

from .gausspoly import WICK, GaussPoly, make_monomial


def _random_exponents(rng: np.random.Generator, degree: int, max_index: int) -> dict:
    exps: dict = {}
    for _ in range(degree):
        i = int(rng.integers(1, max_index + 1))
        exps[i] = exps.get(i, 0) + 1
    return exps


def random_poly(rng: np.random.Generator, max_degree: int = 4, max_index: int = 4, terms: int = 5) -> GaussPoly:
    """Sparse polynomial in the monomial basis with coefficients in [-2, 2]."""
    out = {}
    for _ in range(terms):
        mono = make_monomial(_random_exponents(rng, int(rng.integers(0, max_degree + 1)), max_index))
        out[mono] = out.get(mono, 0.0) + float(rng.uniform(-2.0, 2.0))
    return GaussPoly(out)


def random_chaos(rng: np.random.Generator, m: int, max_index: int = 4, terms: int = 4) -> GaussPoly:
    """Element of the ``m``-th chaos: Wick monomials of total degree ``m``."""
    out = {}
    for _ in range(terms):
        mono = make_monomial(_random_exponents(rng, m, max_index))
        out[mono] = out.get(mono, 0.0) + float(rng.uniform(-2.0, 2.0))
    return GaussPoly(out, basis=WICK).from_wick()


def random_spectrum(rng: np.random.Generator, size: int, zeros: int = 0) -> np.ndarray:
    vals = rng.standard_normal(size) * rng.uniform(0.1, 3.0)
    if zeros:
        vals[rng.choice(size, size=min(zeros, size), replace=False)] = 0.0
    return vals


def random_symmetric(rng: np.random.Generator, size: int) -> np.ndarray:
    M = rng.standard_normal((size, size))
    return (M + M.T) / 2.0

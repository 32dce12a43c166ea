"""Scalar test families: second-chaos sums, the non-integrable counterexample, Hermite ranks."""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from ..gausspoly import GaussPoly, expectation, make_monomial


def default_profile(n: int) -> np.ndarray:
    """``lambda_i = 1/sqrt(2n)``: unit variance and spectral radius ``1/sqrt(2n)``."""
    return np.full(n, 1.0 / math.sqrt(2 * n))


def geometric_profile(ratio: float) -> Callable[[int], np.ndarray]:
    def profile(n: int) -> np.ndarray:
        return ratio ** np.arange(n, dtype=float)

    return profile


def centered(F: GaussPoly) -> GaussPoly:
    """``F - E[F]`` with the constant term replaced, not accumulated."""
    terms = {m: c for m, c in F.from_wick().items() if m != ()}
    nc = GaussPoly(terms)
    mean = expectation(nc)
    if mean != 0.0:
        terms[()] = -mean
    return GaussPoly(terms)


def second_chaos_family(
    n: int,
    profile: Callable[[int], Sequence[float]] | Sequence[float] | None = None,
    normalize: bool = False,
) -> GaussPoly:
    """``F_n = sum_{i<=n} lambda_i (N_i^2 - 1)``.

    ``profile`` is a rule ``n -> lambdas`` or an explicit list; the default
    is :func:`default_profile`.  With ``normalize`` the profile is rescaled
    so that ``2 sum lambda^2 = 1``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if profile is None:
        lam = default_profile(n)
    elif callable(profile):
        lam = np.asarray(profile(n), dtype=float)
    else:
        lam = np.asarray(profile, dtype=float)
    if lam.size != n:
        raise ValueError(f"profile gave {lam.size} values for n={n}")
    if not np.any(lam != 0.0):
        raise ValueError("all-zero profile")
    if normalize:
        lam = lam / math.sqrt(2.0 * float(np.sum(lam * lam)))
    terms = {make_monomial({i + 1: 2}): float(l) for i, l in enumerate(lam) if l != 0.0}
    return centered(GaussPoly(terms))


def counterexample_family(n: int) -> GaussPoly:
    """``F_n = (N_1^2 - 1)/n + N_1``; ``Gamma[F_n, F_n] = (2 N_1/n + 1)^2`` vanishes at ``N_1 = -n/2``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return GaussPoly({make_monomial({1: 2}): 1.0 / n, make_monomial({1: 1}): 1.0, (): -1.0 / n})


def univariate_poly(P) -> GaussPoly:
    """A polynomial in one variable as a GaussPoly in ``N_1``.

    Accepts a GaussPoly in ``N_1`` (either basis), a numpy ``Polynomial`` or
    a sequence of ascending power coefficients.
    """
    if isinstance(P, GaussPoly):
        if any(i != 1 for i in P.coordinates):
            raise ValueError("expected a polynomial in N1 only")
        return P.from_wick()
    coef = np.asarray(getattr(P, "coef", P), dtype=float).ravel()
    return GaussPoly({make_monomial({1: k}) if k else (): float(c) for k, c in enumerate(coef) if c != 0.0})


def hermite_coefficients(P) -> dict[int, float]:
    """``{k: c_k}`` with ``P = sum c_k H_k``."""
    return {(m[0][1] if m else 0): c for m, c in univariate_poly(P).to_wick().items()}


def hermite_rank(P) -> int:
    """Smallest ``s >= 1`` with a nonzero ``H_s`` coefficient in ``P``."""
    ks = [k for k, c in hermite_coefficients(P).items() if k >= 1 and c != 0.0]
    if not ks:
        raise ValueError("polynomial is constant after centering")
    return min(ks)

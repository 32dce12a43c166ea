"""Moment, negative-moment and distance estimators on :class:`SampleBatch`."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from ..gausspoly import ChaosVector, GaussPoly, SymbolicBudgetExceeded, DEFAULT_TERM_BUDGET, inner_product
from ..malliavin import malliavin_matrix
from .sampling import SampleBatch, sample_batch
from .streams import PURPOSE_BOOTSTRAP, generator

BOOTSTRAP_BLOCKS = 1000
BOOTSTRAP_RESAMPLES = 1000


def _fsum_mean(x: np.ndarray) -> float:
    # chunked compensated summation, independent of how the batch was produced
    return math.fsum(np.add.reduceat(x, np.arange(0, x.size, 4096)).tolist()) / x.size if x.size else math.nan


def estimate_moments(b: SampleBatch) -> dict:
    """Mean, variance, fourth moment and fourth-moment delta.

    Univariate: ``delta = E(F - EF)^4 - 3 Var^2`` with all moments centered
    at the sample mean.  Vector: ``delta = E|F|^4 - E|N|^4`` where ``N`` is
    Gaussian with the sample covariance, ``E|N|^4 = tr(C)^2 + 2 tr(C^2)``.
    """
    v = b.finite_values()
    if v.ndim == 1:
        mean = _fsum_mean(v)
        c = v - mean
        var = _fsum_mean(c * c)
        m4 = _fsum_mean(c**4)
        return {"mean": mean, "variance": var, "fourth_moment": m4, "delta": m4 - 3.0 * var * var, "count": v.size}
    mean = v.mean(axis=0)
    C = np.cov(v, rowvar=False, bias=True).reshape(v.shape[1], v.shape[1])
    sq = np.einsum("ij,ij->i", v, v)
    m4 = _fsum_mean(sq * sq)
    gauss4 = float(np.trace(C) ** 2 + 2.0 * np.trace(C @ C))
    return {"mean": mean, "variance": C, "fourth_moment": m4, "delta": m4 - gauss4, "count": v.shape[0]}


def _cumulant_from_gamma(c, g, m):
    var = float(np.mean(c * c))
    if m == 2:
        # second chaos: kappa_4 = (3/2) Var(Gamma) exactly
        k4 = 1.5 * float(np.var(g))
    else:
        k4 = (3.0 / m) * float(np.mean(c * c * (g - g.mean())))
    return k4 / (var * var)


def standardized_delta_from_gamma(b: SampleBatch, m: int, blocks: int = 100) -> dict:
    """Fourth cumulant of the standardized variable through the square field.

    For ``F`` in a single chaos of order ``m`` (up to an additive constant),
    ``E F_c^4 - 3 (Var F)^2 = (3/m) Cov(F_c^2, Gamma)``, and for ``m = 2`` it
    also equals ``(3/2) Var(Gamma)``, which is the form used there.  Both are
    far less noisy than the raw fourth moment when the cumulant is small.
    ``stderr`` is a grouped jackknife over ``blocks`` contiguous blocks.
    """
    if b.gamma_values is None or b.gamma_values.ndim != 1:
        raise ValueError("needs scalar gamma_values")
    ok = np.isfinite(b.values) & np.isfinite(b.gamma_values)
    v, g = b.values[ok], b.gamma_values[ok]
    c = v - v.mean()
    delta = _cumulant_from_gamma(c, g, m)
    edges = np.linspace(0, v.size, blocks + 1).astype(np.intp)
    jk = []
    for a, z in zip(edges[:-1], edges[1:]):
        keep = np.ones(v.size, dtype=bool)
        keep[a:z] = False
        vv = v[keep]
        jk.append(_cumulant_from_gamma(vv - vv.mean(), g[keep], m))
    jk = np.asarray(jk)
    se = math.sqrt((blocks - 1) / blocks * float(np.sum((jk - jk.mean()) ** 2)))
    return {"delta": delta, "stderr": se, "variance": float(np.mean(c * c))}


def block_bootstrap_se(x: np.ndarray, seed: int, blocks: int = BOOTSTRAP_BLOCKS, resamples: int = BOOTSTRAP_RESAMPLES) -> float:
    """Bootstrap standard error of the mean, resampling contiguous block means."""
    x = np.asarray(x, dtype=float)
    k = min(blocks, x.size)
    if k < 2:
        return math.nan
    edges = np.linspace(0, x.size, k + 1).astype(np.intp)
    sums = np.add.reduceat(x, edges[:-1])
    sizes = np.diff(edges).astype(float)
    idx = generator(seed, 0, 0, PURPOSE_BOOTSTRAP).integers(0, k, size=(resamples, k))
    means = sums[idx].sum(axis=1) / sizes[idx].sum(axis=1)
    return float(means.std(ddof=1))


@dataclass(frozen=True)
class NegativeMomentEstimate:
    estimate: float
    top_decile_share: float
    stderr: float
    excluded: int
    count: int
    tail_index: float
    divergent: bool
    prefix_estimates: tuple

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def hill_tail_index(x: np.ndarray, k: int | None = None) -> float:
    """Hill estimator of the Pareto tail index from the ``k`` largest values.

    Default ``k = max(10, floor(sqrt(n)))``.
    """
    x = np.sort(np.asarray(x, dtype=float))
    x = x[x > 0]
    n = x.size
    if n < 20:
        return math.nan
    k = max(10, int(math.isqrt(n))) if k is None else k
    k = min(k, n - 1)
    top = x[n - k:]
    spread = float(np.mean(np.log(top / x[n - k - 1])))
    return math.inf if spread == 0.0 else 1.0 / spread


def estimate_negative_moment(b: SampleBatch, q: float, tail_threshold: float = 1.0) -> NegativeMomentEstimate:
    """Mean of ``Gamma^{-q}`` with heavy-tail diagnostics.

    ``top_decile_share`` is the fraction of the total carried by the largest
    10% of the terms.  The estimate is flagged ``divergent`` when the Hill
    tail index of the terms is at most ``tail_threshold`` (an infinite mean
    has index <= 1).  ``prefix_estimates`` are the means over the first
    ``n/16``, ``n/4`` and ``n`` samples.
    """
    if b.gamma_values is None:
        raise ValueError("batch has no gamma_values; sample with wants=('gamma',)")
    g = b.gamma_values
    if g.ndim != 1:
        g = np.linalg.det(g)
    finite = np.isfinite(g)
    pos = finite & (g > 0)
    excluded = int((~pos).sum())
    t = g[pos] ** (-float(q))
    n = t.size
    if n == 0:
        return NegativeMomentEstimate(math.nan, math.nan, math.nan, excluded, 0, math.nan, True, ())
    est = _fsum_mean(t)
    srt = np.sort(t)
    top = srt[n - max(1, n // 10):]
    share = math.fsum(top.tolist()) / math.fsum(srt.tolist())
    alpha = hill_tail_index(t)
    prefixes = tuple(_fsum_mean(t[: max(1, n // d)]) for d in (16, 4, 1))
    se = block_bootstrap_se(t, b.seed)
    divergent = bool(np.isfinite(alpha) and alpha <= tail_threshold)
    return NegativeMomentEstimate(est, share, se, excluded, n, alpha, divergent, prefixes)


def distribution_distances(b: SampleBatch, standardize: bool = False) -> dict:
    """Kolmogorov distance and W1 to the standard Gaussian.

    With ``standardize`` the samples are first shifted and scaled by their
    own mean and standard deviation (distance to the fitted Gaussian).
    """
    x = np.sort(b.finite_values())
    if x.ndim != 1:
        raise ValueError("univariate batch required")
    n = x.size
    if standardize:
        sd = x.std()
        x = (x - x.mean()) / (sd if sd > 0 else 1.0)
    cdf = ndtr(x)
    i = np.arange(1, n + 1)
    ks = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    q = ndtri((i - 0.5) / n)
    w1 = _fsum_mean(np.abs(x - q))
    return {"kolmogorov": ks, "wasserstein1": w1}


@dataclass(frozen=True)
class SteinDiscrepancy:
    value: float
    method: str  # "symbolic" or "monte-carlo"
    stderr: float = 0.0

    def __float__(self):
        return self.value


def _gamma_term_count(comps) -> int:
    coords = sorted({i for F in comps for i in F.coordinates})
    grads = [[len(F.derivative(i)) for i in coords] for F in comps]
    return sum(a * b for ga in grads for gb in grads for a, b in zip(ga, gb))


def stein_discrepancy(
    V: ChaosVector | GaussPoly,
    budget: int = DEFAULT_TERM_BUDGET,
    samples: int = 100_000,
    seed: int = 0,
) -> SteinDiscrepancy:
    """``|| Gamma(F) - diag(m_i E F_i^2) ||_{L^2}`` (Frobenius inside the expectation).

    Exact through Wick norms when the symbolic cost fits ``budget``;
    otherwise a Monte Carlo estimate with ``method == "monte-carlo"``.
    """
    if isinstance(V, GaussPoly):
        V = ChaosVector.of([V])
    comps = list(V)
    target = [m * inner_product(F, F) for F, m in zip(comps, V.degrees)]
    d = len(comps)
    if _gamma_term_count(comps) <= budget:
        M = malliavin_matrix(comps)
        total = []
        for a in range(d):
            for c in range(d):
                P = M[a, c] - (target[a] if a == c else 0.0)
                total.append(inner_product(P, P))
        return SteinDiscrepancy(math.sqrt(max(math.fsum(total), 0.0)), "symbolic")
    b = sample_batch(V, samples, seed, wants=("gamma",))
    G = b.gamma_values - np.diag(target)[None, :, :]
    sq = np.einsum("nij,nij->n", G, G)
    sq = sq[np.isfinite(sq)]
    m = float(sq.mean())
    se = float(sq.std() / math.sqrt(sq.size)) / (2.0 * math.sqrt(m)) if m > 0 else 0.0
    return SteinDiscrepancy(math.sqrt(m), "monte-carlo", se)

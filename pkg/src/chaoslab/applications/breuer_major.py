"""Stationary Gaussian sequences and Breuer-Major sums as GaussPolys."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from ..gausspoly import GaussPoly, poly_sum
from ..montecarlo.sampling import Sampler, default_chunk_rows
from ..montecarlo.streams import normal_rows
from .families import centered, hermite_coefficients, hermite_rank, univariate_poly

PSD_FLOOR = -1e-8
TAIL_TERMS = 1_000_000


@dataclass(frozen=True)
class CorrelationModel:
    """Correlation ``rho(k) = E[X_0 X_k]`` of a stationary unit-variance sequence.

    ``finite_range`` (parameter ``r``): moving average of ``r+1`` equal
    weights, ``rho(k) = (r + 1 - |k|)/(r + 1)`` for ``|k| <= r``.
    ``ar1`` (parameter ``a``, ``|a| < 1``): ``rho(k) = a^|k|``.
    ``fgn`` (Hurst ``H`` in (0, 1)): fractional Gaussian noise increments.
    """

    kind: str
    params: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind == "finite_range":
            if len(self.params) != 1 or self.params[0] < 0 or self.params[0] != int(self.params[0]):
                raise ValueError("finite_range takes one nonnegative integer range")
        elif self.kind == "ar1":
            if len(self.params) != 1 or not abs(self.params[0]) < 1:
                raise ValueError("ar1 takes one coefficient with |a| < 1")
        elif self.kind == "fgn":
            if len(self.params) != 1 or not 0 < self.params[0] < 1:
                raise ValueError("fgn takes one Hurst index in (0, 1)")
        else:
            raise ValueError(f"unknown correlation kind {self.kind!r}")

    @classmethod
    def white_noise(cls) -> "CorrelationModel":
        return cls("finite_range", (0,))

    def rho(self, k) -> np.ndarray:
        k = np.abs(np.asarray(k, dtype=float))
        (a,) = self.params
        if self.kind == "finite_range":
            return np.where(k <= a, (a + 1.0 - k) / (a + 1.0), 0.0)
        if self.kind == "ar1":
            return a**k
        h2 = 2.0 * a
        return 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)

    def covariance(self, n: int) -> np.ndarray:
        C = toeplitz(self.rho(np.arange(n)))
        floor = float(np.linalg.eigvalsh(C).min())
        if floor < PSD_FLOOR:
            raise ValueError(f"Toeplitz covariance not PSD (min eigenvalue {floor:.3e})")
        return C

    def ell_s_tail(self, s: float, start: int = 1) -> float:
        """``sum_{k >= start} |rho(k)|^s``; ``inf`` when the series diverges."""
        (a,) = self.params
        if self.kind == "finite_range":
            k = np.arange(start, int(a) + 1)
            return math.fsum(np.abs(self.rho(k)) ** s) if k.size else 0.0
        if self.kind == "ar1":
            return abs(a) ** (s * start) / (1.0 - abs(a) ** s) if a != 0 else float(start == 0)
        if a == 0.5:
            return 0.0
        decay = s * (2.0 - 2.0 * a)  # |rho(k)| ~ H|2H-1| k^(2H-2)
        if decay <= 1.0:
            return math.inf
        k = np.arange(start, start + TAIL_TERMS, dtype=float)
        head = math.fsum(np.abs(self.rho(k)) ** s)
        K = start + TAIL_TERMS
        c = abs(a * (2 * a - 1)) ** s
        return head + c * K ** (1.0 - decay) / (decay - 1.0)


def cholesky_factor(C: np.ndarray) -> np.ndarray:
    """Lower factor of a PSD matrix; semidefinite inputs go through an eigen-decomposition."""
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(C)
        L = V * np.sqrt(np.clip(w, 0.0, None))
        _, R = np.linalg.qr(L.T)
        return R.T * np.sign(np.diag(R))[None, :]


def breuer_major_variance(model: CorrelationModel, P, n: int) -> float:
    """``sigma_n^2 = sum_{|k|<n} (1 - |k|/n) sum_q c_q^2 q! rho(k)^q`` with ``P = sum c_q H_q``."""
    coef = {k: c for k, c in hermite_coefficients(P).items() if k >= 1}
    k = np.arange(-(n - 1), n)
    r = model.rho(k)
    w = 1.0 - np.abs(k) / n
    per_k = sum(c * c * math.factorial(q) * r**q for q, c in coef.items())
    return math.fsum(w * per_k)


@dataclass(frozen=True)
class BreuerMajorSum:
    poly: GaussPoly
    hermite_rank: int
    ell_s_tail: float
    sigma2: float
    scale: float


def breuer_major(model: CorrelationModel, P, n: int, normalize: bool = True) -> BreuerMajorSum:
    """``Z_n = scale * sum_k P(X_k) - E`` with ``X = L N`` and ``L L^T`` the Toeplitz covariance.

    ``scale = n^(-1/2)``, divided by ``sigma_n`` when ``normalize`` so that
    ``Var Z_n = 1``.  The report carries the Hermite rank ``s`` and the
    tail ``sum_{k>=1} |rho(k)|^s``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    L = cholesky_factor(model.covariance(n))
    Pp = univariate_poly(P)
    s = hermite_rank(Pp)
    sigma2 = breuer_major_variance(model, Pp, n)
    scale = 1.0 / math.sqrt(n * sigma2) if normalize else 1.0 / math.sqrt(n)
    powers = {m[0][1]: c for m, c in Pp.items() if m}
    top = max(powers, default=0)
    parts = []
    for k in range(n):
        X = GaussPoly({((j + 1, 1),): float(L[k, j]) for j in range(k + 1) if L[k, j] != 0.0})
        Xp = X
        for d in range(1, top + 1):
            if d > 1:
                Xp = Xp * X
            if d in powers:
                parts.append(Xp.scale(scale * powers[d]))
    Z = centered(poly_sum(parts))
    return BreuerMajorSum(Z, s, model.ell_s_tail(s), sigma2, scale)


class BreuerMajorSampler(Sampler):
    """Numeric twin of :func:`breuer_major`: ``X = L N`` row by row, no expansion.

    Uses the same coordinates as the GaussPoly route (``N_j`` at column
    ``j``), so both evaluate to the same numbers on the same draws.
    """

    def __init__(self, model: CorrelationModel, P, n: int, normalize: bool = True, stream_id: int = 0):
        if n < 2:
            raise ValueError("n must be >= 2")
        self.L = cholesky_factor(model.covariance(n))
        Pp = univariate_poly(P)
        self.powers = np.zeros(max(Pp.degree, 0) + 1)
        for m, c in Pp.items():
            self.powers[m[0][1] if m else 0] = c
        self.mean_P = hermite_coefficients(Pp).get(0, 0.0)
        self.sigma2 = breuer_major_variance(model, Pp, n)
        self.scale = 1.0 / math.sqrt(n * self.sigma2) if normalize else 1.0 / math.sqrt(n)
        self.n = n
        self.dim = n
        self.stream_id = stream_id
        self.chunk_rows = default_chunk_rows(n)

    def draw(self, seed, row0, rows, wants):
        X = normal_rows(seed, self.stream_id, row0, rows, self.dim) @ self.L.T
        PX = np.polynomial.polynomial.polyval(X, self.powers)
        return {"values": self.scale * (PX.sum(axis=1) - self.n * self.mean_P)}

"""Spectral remainders, rank distances and second-chaos spectral tools.

Conventions: ``remainder_Rq`` sums over *ordered* tuples of distinct indices,
so ``R_q = q! * e_q(mu)`` with ``mu`` the squared eigenvalues (or the
eigenvalues of ``A^T A`` for a rectangular ``A``).  ``r_q`` is 1-indexed:
``r_1`` is the squared Frobenius norm.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss

from .gausspoly import GaussPoly, chaos_degrees

RANK_RTOL = 1e-12
CAUCHY_BINET_MAX_DIM = 12


class _DivergentType:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Divergent"

    def __str__(self):
        return "divergent"

    def __bool__(self):
        return False


Divergent = _DivergentType()


def is_divergent(x) -> bool:
    return x is Divergent


@dataclass(frozen=True)
class SymmetricSpectrum:
    """Eigenvalues of a symmetric matrix, or singular values of a rectangular one."""

    values: np.ndarray
    source_shape: tuple
    symmetric: bool = True

    @classmethod
    def from_matrix(cls, A) -> "SymmetricSpectrum":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        r, c = A.shape
        if r == c and np.allclose(A, A.T, rtol=0, atol=1e-13 * max(1.0, np.abs(A).max(initial=0.0))):
            vals = np.linalg.eigvalsh((A + A.T) / 2)
            return cls(vals, (r, c), True)
        gram = A.T @ A if c <= r else A @ A.T
        mu = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
        return cls(np.sqrt(mu), (r, c), False)

    @classmethod
    def from_values(cls, values) -> "SymmetricSpectrum":
        v = np.asarray(values, dtype=float).ravel()
        return cls(v, (v.size, v.size), True)

    @property
    def squared(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float) ** 2

    def rank(self, rtol: float = RANK_RTOL) -> int:
        a = np.abs(np.asarray(self.values, dtype=float))
        if a.size == 0 or a.max() == 0.0:
            return 0
        return int(np.count_nonzero(a > rtol * a.max()))

    def nonzero(self, rtol: float = RANK_RTOL) -> np.ndarray:
        a = np.asarray(self.values, dtype=float)
        if a.size == 0 or np.abs(a).max() == 0.0:
            return a[:0]
        return a[np.abs(a) > rtol * np.abs(a).max()]

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(self.values).max(initial=0.0))


def _as_spectrum(s) -> SymmetricSpectrum:
    """Accept a spectrum, a 1-D array of eigenvalues, or a matrix."""
    if isinstance(s, SymmetricSpectrum):
        return s
    a = np.asarray(s, dtype=float)
    if a.ndim <= 1:
        return SymmetricSpectrum.from_values(a)
    return SymmetricSpectrum.from_matrix(a)


def elementary_symmetric(x, q: int) -> np.ndarray:
    """``[e_0(x), ..., e_q(x)]`` by the standard one-variable-at-a-time recursion."""
    e = np.zeros(q + 1)
    e[0] = 1.0
    for v in np.asarray(x, dtype=float).ravel():
        e[1:] = e[1:] + v * e[:-1]
    return e


def remainder_Rq(s, q: int) -> float:
    if q < 1:
        raise ValueError("q must be >= 1")
    s = _as_spectrum(s)
    if s.rank() < q:
        return 0.0
    return math.factorial(q) * float(elementary_symmetric(s.squared, q)[q])


def rank_distance_rq(s, q: int) -> float:
    if q < 1:
        raise ValueError("q must be >= 1")
    mu = np.sort(_as_spectrum(s).squared)[::-1]
    return float(math.fsum(mu[q - 1:]))


def cauchy_binet_Rq(A, q: int) -> float:
    """``q! * sum_{|I|=|J|=q} det(A_IJ)^2`` by enumerating all minors."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    r, c = A.shape
    if max(r, c) > CAUCHY_BINET_MAX_DIM:
        raise ValueError(
            f"matrix {r}x{c} too large for minor enumeration (max {CAUCHY_BINET_MAX_DIM}); "
            "use remainder_Rq on the eigenvalues instead"
        )
    if q < 1:
        raise ValueError("q must be >= 1")
    if q > min(r, c):
        return 0.0
    total = []
    cols = list(itertools.combinations(range(c), q))
    for I in itertools.combinations(range(r), q):
        sub = A[list(I)]
        for J in cols:
            total.append(np.linalg.det(sub[:, list(J)]) ** 2)
    return math.factorial(q) * math.fsum(total)


@dataclass(frozen=True)
class RemainderSlacks:
    """Slack (right minus left) of each comparison between ``R_q`` and ``r_q``."""

    q: int
    Rq: float
    recursive_lower: float
    recursive_upper: float
    product_lower: float
    product_upper: float
    power_lower: float
    power_upper: float
    radius_bound: float | None = None
    radius_slack: float | None = None

    def slacks(self) -> dict:
        out = {
            "recursive_lower": self.recursive_lower,
            "recursive_upper": self.recursive_upper,
            "product_lower": self.product_lower,
            "product_upper": self.product_upper,
            "power_lower": self.power_lower,
            "power_upper": self.power_upper,
        }
        if self.radius_slack is not None:
            out["radius"] = self.radius_slack
        return out

    def min_slack(self) -> float:
        return min(self.slacks().values())


def remainder_bounds_report(s, q: int, frobenius_tol: float = 1e-9) -> RemainderSlacks:
    """All six comparison slacks, plus the spectral-radius bound when it applies.

    The radius bound ``R_q >= prod_{k<q} (1 - k rho)`` is checked when the
    squared eigenvalues sum to one and ``rho <= 1/q``.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    s = _as_spectrum(s)
    R = [remainder_Rq(s, k) if k >= 1 else 1.0 for k in range(q + 1)]
    r = [None] + [rank_distance_rq(s, k) for k in range(1, q + 1)]
    Rq, Rq1, rq = R[q], R[q - 1], r[q]
    prod_r = math.prod(r[1:q + 1])
    radius_bound = radius_slack = None
    rho = s.spectral_radius
    if abs(float(np.sum(s.squared)) - 1.0) <= frobenius_tol and rho <= 1.0 / q:
        radius_bound = math.prod(1.0 - k * rho for k in range(1, q))
        radius_slack = Rq - radius_bound
    return RemainderSlacks(
        q=q,
        Rq=Rq,
        recursive_lower=Rq - Rq1 * rq,
        recursive_upper=q * Rq1 * rq - Rq,
        product_lower=Rq - prod_r,
        product_upper=math.factorial(q) * prod_r - Rq,
        power_lower=Rq - rq**q,
        power_upper=math.factorial(q) * r[1] ** (q - 1) * rq - Rq,
        radius_bound=radius_bound,
        radius_slack=radius_slack,
    )


def second_chaos_matrix(F: GaussPoly) -> np.ndarray:
    """Symmetric ``A`` with ``F = q_A(N, N) - E q_A(N, N)``, indexed by ``N_1..N_K``."""
    w = F.to_wick()
    if F.is_zero():
        return np.zeros((0, 0))
    if chaos_degrees(F) != (2,):
        raise ValueError(f"F is not in the second chaos (chaos orders {chaos_degrees(F)})")
    K = F.max_index
    A = np.zeros((K, K))
    for mono, c in w.items():
        if len(mono) == 1:
            (i, _), = mono
            A[i - 1, i - 1] = c
        else:
            (i, _), (j, _) = mono
            A[i - 1, j - 1] = A[j - 1, i - 1] = c / 2.0
    return A


def gamma_laplace(s, t: float) -> float:
    """``E[exp(-t^2/2 Gamma[F,F])] = prod (1 + 4 t^2 lambda^2)^(-1/2)`` for second-chaos ``F``."""
    mu = _as_spectrum(s).squared
    return float(np.exp(-0.5 * np.sum(np.log1p(4.0 * t * t * mu))))


@dataclass(frozen=True)
class QuadratureResult:
    value: object  # float or Divergent
    abscissa_count: int
    tail_bound: float

    @property
    def divergent(self) -> bool:
        return self.value is Divergent


def _panel_integral(f, a: float, b: float, nodes: int) -> float:
    x, w = leggauss(nodes)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.dot(w, f(mid + half * x)))


def negative_moment_quadrature(s, q: int, rtol: float = 1e-10, max_nodes: int = 256) -> QuadratureResult:
    """``E[Gamma[F,F]^-q]`` for a second-chaos ``F`` with spectrum ``s``.

    Integrates ``(1/(q-1)!) * int_0^inf u^(q-1) prod(1 + 8 u lambda^2)^(-1/2) du``
    with Gauss-Legendre panels on ``[0, S]`` (geometrically growing, node
    count doubled until stable) plus the power-law tail bound past ``S``.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    s = _as_spectrum(s)
    mu = s.nonzero() ** 2
    K = mu.size
    if K <= 2 * q:
        return QuadratureResult(Divergent, 0, math.inf)
    log_mu8 = np.log(8.0 * mu)
    cq = 1.0 / math.factorial(q - 1)

    def integrand(u):
        u = np.asarray(u, dtype=float)
        return u ** (q - 1) * np.exp(-0.5 * np.log1p(8.0 * np.outer(u, mu)).sum(axis=1))

    def tail(S):
        # prod (1+8 S mu)^(-1/2) <= prod (8 S mu)^(-1/2)
        expo = q - K / 2.0
        return cq * math.exp(-0.5 * float(log_mu8.sum()) + expo * math.log(S)) / (K / 2.0 - q)

    a = 1.0 / (8.0 * float(mu.max()))
    panels = [(0.0, a)]
    total = 0.0
    count = 0
    while True:
        lo, hi = panels[-1]
        nodes = 16
        prev = _panel_integral(integrand, lo, hi, nodes)
        while nodes < max_nodes:
            nodes *= 2
            cur = _panel_integral(integrand, lo, hi, nodes)
            done = abs(cur - prev) <= rtol * abs(cur) * 1e-2
            prev = cur
            if done:
                break
        count += nodes
        total += cq * prev
        tb = tail(hi)
        if tb <= rtol * total or len(panels) > 4000:
            return QuadratureResult(total, count, tb)
        panels.append((hi, 2.0 * hi if hi > 0 else a))


def remainder_moment_bound(s, q: int):
    """The computable factor ``R_{2q+1}^(-1/2)`` of the negative-moment bound."""
    R = remainder_Rq(_as_spectrum(s), 2 * q + 1)
    if R <= 0.0:
        return Divergent
    return R ** -0.5


def sphere_net(d: int, N: int) -> np.ndarray:
    """Normalized grid points ``b_I / |b_I|`` for ``I`` in ``[-N, N]^d \\ {0}``.

    Rows are unit vectors; duplicates after normalization are merged.
    """
    if d < 2:
        raise ValueError("dimension must be >= 2")
    if N < 2 * math.sqrt(d):
        raise ValueError(f"N={N} too small: need N >= 2*sqrt(d) = {2 * math.sqrt(d):.3f}")
    axes = [np.arange(-N, N + 1)] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d).astype(float)
    grid = grid[np.any(grid != 0, axis=1)]
    unit = grid / np.linalg.norm(grid, axis=1, keepdims=True)
    _, idx = np.unique(np.round(unit, 12), axis=0, return_index=True)
    return unit[np.sort(idx)]


def sphere_net_radius(d: int, N: int) -> float:
    """Covering radius guaranteed for :func:`sphere_net`."""
    return 4.0 * math.sqrt(d) / N


def compressed_remainder(A, X, q: int) -> float:
    """``det((A X)^T (A X))`` for ``X`` with ``q`` columns.

    This is the unordered remainder ``e_q`` of ``B = A X``; the ordered
    ``remainder_Rq(B, q)`` equals ``q!`` times it.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != q:
        raise ValueError(f"X has {X.shape[1]} columns, expected q={q}")
    if A.shape[1] != X.shape[0]:
        raise ValueError(f"shape mismatch: A is {A.shape}, X is {X.shape}")
    B = A @ X
    return float(np.linalg.det(B.T @ B))


# --------------------------------------------------------------------------
# CSV matrices: header line ``rows,cols``, then the shape, then the rows
# --------------------------------------------------------------------------

def write_matrix_csv(A, path=None) -> str:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rows", "cols"])
    w.writerow([A.shape[0], A.shape[1]])
    for row in A:
        w.writerow([repr(float(v)) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_matrix_csv(source) -> np.ndarray:
    text = Path(source).read_text() if not isinstance(source, str) or "\n" not in source else source
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["rows", "cols"]:
        raise ValueError("line 1: expected header 'rows,cols'")
    r, c = (int(v) for v in rows[1])
    data = np.array([[float(v) for v in row] for row in rows[2:2 + r]])
    if data.shape != (r, c):
        raise ValueError(f"declared shape {(r, c)} but read {data.shape}")
    return data

"""Gaussian-kernel density estimates with analytic derivatives.

``f^(q)(x) = 1/(n h^(q+1)) * sum_i K^(q)((x - X_i)/h)`` where
``K^(q)(u) = (-1)^q H_q(u) phi(u)``.  Large samples are linearly binned
onto a fine grid and convolved by FFT; small ones are summed directly.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from ..gausspoly import hermite_eval
from .sampling import SampleBatch

GRID_LO = -5.0
GRID_HI = 5.0
GRID_STEP = 0.01
MIN_SAMPLES = 100
KERNEL_CUTOFF = 10.0  # kernel support in bandwidths
EXACT_WORK_LIMIT = 20_000_000  # samples x grid points summed directly
BIN_REFINE = 4  # fine bins per output grid step
FLOOR = 1e-12

_SQRT2PI = math.sqrt(2.0 * math.pi)


def phi_derivative(q: int, x) -> np.ndarray:
    """``phi^(q)(x) = (-1)^q H_q(x) phi(x)``."""
    x = np.asarray(x, dtype=float)
    return (-1) ** q * hermite_eval(q, x) * np.exp(-0.5 * x * x) / _SQRT2PI


def auto_bandwidth(x: np.ndarray, order: int) -> float:
    """``n^(-1/(2q+5)) * std``."""
    return x.size ** (-1.0 / (2 * order + 5)) * float(np.std(x))


def _direct(x, points, h, order, weights=None):
    out = np.zeros(points.size)
    step = max(1, EXACT_WORK_LIMIT // max(points.size, 1) // 4)
    for s in range(0, x.size, step):
        u = (points[:, None] - x[None, s:s + step]) / h
        k = phi_derivative(order, u)
        out += k.sum(axis=1) if weights is None else k @ weights[s:s + step]
    return out


def _binned(x, lo, step, count, h, order, weights=None, refine=1):
    """Unnormalized kernel sums at ``lo + j*step``, ``j < count``."""
    fine = step / refine
    M = int(math.ceil(KERNEL_CUTOFF * h / fine))
    a = lo - M * fine
    size = (count - 1) * refine + 1 + 2 * M
    pos = (x - a) / fine
    keep = (pos >= 0) & (pos <= size - 1)
    pos = pos[keep]
    i = np.minimum(np.floor(pos).astype(np.intp), size - 2)
    w = pos - i
    wt = np.ones(pos.size) if weights is None else weights[keep]
    c = np.bincount(i, weights=wt * (1.0 - w), minlength=size) + np.bincount(i + 1, weights=wt * w, minlength=size)
    kern = phi_derivative(order, np.arange(-M, M + 1) * fine / h)
    full = fftconvolve(c, kern, mode="full")
    conv = full[M:M + size]
    return conv[M:M + (count - 1) * refine + 1:refine]


def kernel_sums(x, points_lo, step, count, h, order, weights=None, method="auto", refine=1) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if method == "auto":
        method = "exact" if x.size * count <= EXACT_WORK_LIMIT else "binned"
    if method == "exact":
        pts = points_lo + step * np.arange(count)
        return _direct(x, pts, h, order, weights)
    if method == "binned":
        return _binned(x, points_lo, step, count, h, order, weights, refine)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class DensityEstimate:
    grid: np.ndarray
    order: int
    values: np.ndarray
    bandwidth: float
    method: str = "exact"

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0]) if self.grid.size > 1 else 0.0

    def phi_q(self) -> np.ndarray:
        return phi_derivative(self.order, self.grid)

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "fq_hat", "phi_q", "abs_diff"])
        ref = self.phi_q()
        for x, f, p in zip(self.grid, self.values, ref):
            w.writerow([repr(float(x)), repr(float(f)), repr(float(p)), repr(float(abs(f - p)))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _univariate(b) -> np.ndarray:
    x = b.finite_values() if isinstance(b, SampleBatch) else np.asarray(b, dtype=float)
    if x.ndim != 1:
        raise ValueError("univariate samples required")
    return x[np.isfinite(x)]


def kde_density(
    b: SampleBatch | np.ndarray,
    order: int = 0,
    bandwidth: float | str = "auto",
    grid: tuple[float, float, float] = (GRID_LO, GRID_HI, GRID_STEP),
    method: str = "auto",
) -> DensityEstimate:
    x = _univariate(b)
    n = x.size
    if n < MIN_SAMPLES:
        raise ValueError(f"{n} samples: a density estimate needs at least {MIN_SAMPLES}")
    if order < 0:
        raise ValueError("order must be >= 0")
    h = auto_bandwidth(x, order) if bandwidth == "auto" else float(bandwidth)
    if not h > 0:
        raise ValueError("bandwidth must be positive (degenerate samples?)")
    lo, hi, step = grid
    count = int(round((hi - lo) / step)) + 1
    if method == "auto":
        method = "exact" if n * count <= EXACT_WORK_LIMIT else "binned"
    sums = kernel_sums(x, lo, step, count, h, order, method=method, refine=BIN_REFINE)
    vals = sums / (n * h ** (order + 1))
    return DensityEstimate(lo + step * np.arange(count), order, vals, h, method)


def density_distance(d: DensityEstimate) -> float:
    """Sup over the grid of ``|f^(q) - phi^(q)|``."""
    return float(np.max(np.abs(d.values - d.phi_q())))


def total_variation(d: DensityEstimate) -> float:
    """``(1/2) int |f - phi|`` over the grid (order-0 estimates)."""
    if d.order != 0:
        raise ValueError("total variation needs an order-0 estimate")
    return 0.5 * float(np.trapezoid(np.abs(d.values - d.phi_q()), d.grid))


def _at_points(x, pts, h, order, weights=None):
    """Kernel sums at arbitrary points through a grid of step ``h/8`` and interpolation."""
    lo, hi = float(pts.min()), float(pts.max())
    step = h / 8.0
    count = int(math.ceil((hi - lo) / step)) + 2
    if count > 1 << 22:
        raise ValueError("sample range too wide for grid evaluation")
    sums = kernel_sums(x, lo, step, count, h, order, weights=weights, method="binned")
    return np.interp(pts, lo + step * np.arange(count), sums)


def kde_at(x, points, order: int = 0, bandwidth: float | None = None) -> np.ndarray:
    x = _univariate(x)
    h = auto_bandwidth(x, order) if bandwidth is None else bandwidth
    return _at_points(x, np.asarray(points, dtype=float), h, order) / (x.size * h ** (order + 1))


def nadaraya_watson(x, y, points, bandwidth: float | None = None) -> np.ndarray:
    """Kernel regression of ``y`` on ``x`` evaluated at ``points``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h = auto_bandwidth(x, 0) if bandwidth is None else bandwidth
    pts = np.asarray(points, dtype=float)
    num = _at_points(x, pts, h, 0, weights=y)
    den = _at_points(x, pts, h, 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return num / den


def entropy_fisher(b: SampleBatch | np.ndarray, score_pairs=None, bandwidth: float | None = None) -> dict:
    """Plug-in relative entropy and relative Fisher information against N(0,1).

    ``score_pairs = (F, Z)`` with ``E[Z | F] = -(log f)'`` switches the score
    estimate from ``f'/f`` to kernel regression of ``Z`` on ``F``.  The Fisher
    residual is ``rho_hat(F) + F`` with ``rho_hat`` the estimate of ``(log f)'``.
    Samples where the density estimate falls below 1e-12 are excluded.
    """
    x = _univariate(b)
    n = x.size
    if n < MIN_SAMPLES:
        raise ValueError(f"{n} samples: need at least {MIN_SAMPLES}")
    h0 = auto_bandwidth(x, 0) if bandwidth is None else bandwidth
    f = _at_points(x, x, h0, 0) / (n * h0)
    ok = f > FLOOR
    log_phi = -0.5 * x * x - math.log(_SQRT2PI)
    ent_terms = np.log(f[ok]) - log_phi[ok]
    if score_pairs is not None:
        F, Z = (np.asarray(a, dtype=float) for a in score_pairs)
        good = np.isfinite(F) & np.isfinite(Z)
        F, Z = F[good], Z[good]
        rho_hat = -nadaraya_watson(F, Z, F, bandwidth=auto_bandwidth(F, 0) if bandwidth is None else bandwidth)
        resid = rho_hat + F
        resid = resid[np.isfinite(resid)]
    else:
        h1 = auto_bandwidth(x, 1) if bandwidth is None else bandwidth
        f1 = _at_points(x, x[ok], h1, 1) / (n * h1 * h1)
        resid = f1 / f[ok] + x[ok]
    fish_terms = resid * resid
    return {
        "entropy": float(ent_terms.mean()),
        "entropy_se": float(ent_terms.std() / math.sqrt(ent_terms.size)),
        "fisher": float(fish_terms.mean()),
        "fisher_se": float(fish_terms.std() / math.sqrt(fish_terms.size)),
        "excluded": int(n - ok.sum()),
    }

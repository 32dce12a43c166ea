"""Malliavin operators acting on :class:`~chaoslab.gausspoly.GaussPoly`.

Everything here is exact polynomial algebra: the square field ``Gamma``, the
Malliavin matrix of a vector, Hessians, directional derivatives ``D_x`` and
``D_X``, iterated sharp operators and the rational score kernel.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .gausspoly import ChaosVector, GaussPoly, chaos_degrees, evaluate, poly_sum


@dataclass(frozen=True)
class PolyMatrix:
    """2-D array of GaussPolys."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged PolyMatrix")
        object.__setattr__(self, "entries", rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.entries), len(self.entries[0]) if self.entries else 0)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def is_symmetric(self) -> bool:
        r, c = self.shape
        return r == c and all(
            self.entries[i][j] == self.entries[j][i] for i in range(r) for j in range(i + 1, r)
        )

    def evaluate(self, point) -> np.ndarray:
        """Numeric matrix at one point, or a stack ``(rows, r, c)`` for a 2-D array of points."""
        x = np.asarray(point, dtype=float)
        r, c = self.shape
        if x.ndim == 1:
            return np.array([[evaluate(e, x) for e in row] for row in self.entries]).reshape(r, c)
        out = np.empty((x.shape[0], r, c))
        for i in range(r):
            for j in range(c):
                out[:, i, j] = evaluate(self.entries[i][j], x)
        return out

    def allclose(self, other: "PolyMatrix", rtol: float = 1e-10, atol: float = 1e-12) -> bool:
        return self.shape == other.shape and all(
            a.allclose(b, rtol=rtol, atol=atol)
            for ra, rb in zip(self.entries, other.entries)
            for a, b in zip(ra, rb)
        )


def _coords_union(*polys: GaussPoly) -> list[int]:
    return sorted({i for F in polys for i in F.coordinates})


def gamma(F: GaussPoly, G: GaussPoly, coords: Iterable[int] | None = None) -> GaussPoly:
    """Square field ``sum_i dF/dN_i * dG/dN_i``.

    Restricting ``coords`` to a subset of coordinates gives the partial
    operators (``Gamma_N``, ``Gamma_G``) of a partitioned Gaussian vector.
    """
    idx = _coords_union(F, G) if coords is None else sorted(set(coords))
    parts = []
    for i in idx:
        dF = F.derivative(i)
        if dF.is_zero():
            continue
        dG = dF if G is F else G.derivative(i)
        if not dG.is_zero():
            parts.append(dF * dG)
    return poly_sum(parts)


def malliavin_matrix(V: ChaosVector | Sequence[GaussPoly]) -> PolyMatrix:
    comps = list(V)
    d = len(comps)
    grads = {}
    coords = _coords_union(*comps)
    for a, F in enumerate(comps):
        grads[a] = {i: F.derivative(i) for i in coords}
    rows = [[None] * d for _ in range(d)]
    for a in range(d):
        for b in range(a, d):
            parts = [
                grads[a][i] * grads[b][i]
                for i in coords
                if not grads[a][i].is_zero() and not grads[b][i].is_zero()
            ]
            rows[a][b] = rows[b][a] = poly_sum(parts)
    return PolyMatrix(rows)


def hessian(F: GaussPoly, dim: int | None = None) -> PolyMatrix:
    """Matrix of second partials over coordinates ``1..dim`` (default: max index of ``F``)."""
    K = max(F.max_index, 1) if dim is None else dim
    first = [F.derivative(i) for i in range(1, K + 1)]
    rows = [[None] * K for _ in range(K)]
    for i in range(K):
        for j in range(i, K):
            rows[i][j] = rows[j][i] = first[i].derivative(j + 1)
    return PolyMatrix(rows)


def directional_derivative(F: GaussPoly, x: Sequence[float]) -> GaussPoly:
    """``D_x F = sum_k x_k dF/dN_k``."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size < F.max_index:
        raise ValueError(f"direction has length {x.size} < max coordinate index {F.max_index}")
    return poly_sum(F.derivative(k).scale(x[k - 1]) for k in F.coordinates if x[k - 1] != 0.0)


def d_X(F: GaussPoly, X) -> ChaosVector:
    """``D_X F`` for a ``K x d`` matrix ``X`` of directions (one per column)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a K x d matrix")
    if X.shape[0] < F.max_index:
        raise ValueError(f"X has {X.shape[0]} rows < max coordinate index {F.max_index}")
    comps = [directional_derivative(F, X[:, j]) for j in range(X.shape[1])]
    top = max(chaos_degrees(F), default=0)
    return ChaosVector(tuple(comps), tuple([max(top - 1, 0)] * len(comps)))


def sharp_index(row: int, col: int, K: int, fresh_offset: int) -> int:
    """Coordinate carrying ``G_{row,col}`` (both 1-based) in the enlarged space."""
    return fresh_offset + (row - 1) * K + (col - 1)


def sharp_k(F: GaussPoly, k: int, fresh_offset: int) -> GaussPoly:
    """Iterated sharp operator ``#^k[F]``.

    ``G_{j,i}`` lives at coordinate ``fresh_offset + (j-1)*K + (i-1)`` with
    ``K`` the largest coordinate index of ``F``.  Only the original
    coordinates are differentiated.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    K = F.max_index
    if fresh_offset <= K:
        raise ValueError(f"fresh_offset {fresh_offset} collides with coordinates of F (max N{K})")
    current = F
    for j in range(1, k + 1):
        parts = []
        for i in range(1, K + 1):
            d = current.derivative(i)
            if not d.is_zero():
                parts.append(d * GaussPoly.coordinate(sharp_index(j, i, K, fresh_offset)))
        current = poly_sum(parts)
    return current


@dataclass(frozen=True)
class RationalScoreKernel:
    """``Z = numerator / denominator`` with ``E[Z Phi(F)] = E[Phi'(F)]``.

    With this sign ``E[Z | F = x] = -(log f)'(x)``: for a standard Gaussian
    ``Z = F``.  Numerator and denominator are kept uncancelled.
    """

    numerator: GaussPoly
    denominator: GaussPoly
    F: GaussPoly
    m: int

    def evaluate(self, points) -> np.ndarray:
        return np.asarray(evaluate(self.numerator, points)) / np.asarray(evaluate(self.denominator, points))


def score_kernel(F: GaussPoly, m: int) -> RationalScoreKernel:
    """Score kernel ``Z = m F W - Gamma[F, W]`` with ``W = 1 / Gamma[F, F]``.

    Uses ``Gamma[F, 1/G] = -Gamma[F, G] / G^2`` so that
    ``Z = (m F Gamma[F,F] + Gamma[F, Gamma[F,F]]) / Gamma[F,F]^2``.
    """
    if F.is_constant():
        raise ValueError("score kernel needs a non-constant F")
    g = gamma(F, F)
    num = F * g * float(m) + gamma(F, g)
    return RationalScoreKernel(numerator=num, denominator=g * g, F=F, m=int(m))

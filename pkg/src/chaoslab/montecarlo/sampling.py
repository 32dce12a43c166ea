"""Seeded sampling of functionals into :class:`SampleBatch` objects."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..gausspoly import ChaosVector, GaussPoly
from ..malliavin import gamma, hessian, malliavin_matrix
from .evaluator import CompiledPolys
from .streams import normal_rows

# target number of Gaussian values per chunk; chunks are a multiple of 4 rows
CHUNK_VALUES = 1 << 20
GAMMA_FLOOR = -1e-12


def default_chunk_rows(dim: int) -> int:
    return max(4, (CHUNK_VALUES // max(dim, 1)) // 4 * 4)


class Sampler:
    """Interface for anything :func:`sample_batch` can draw from.

    ``draw(seed, row0, rows, wants)`` returns a dict with ``values`` (shape
    ``(rows,)`` or ``(rows, d)``) and optionally ``gamma`` and ``spectra``.
    It must depend only on its arguments, never on call order.
    """

    dim: int = 0
    chunk_rows: int = 4096

    def draw(self, seed: int, row0: int, rows: int, wants: frozenset) -> dict:
        raise NotImplementedError


class PolySampler(Sampler):
    """Evaluates a GaussPoly or ChaosVector at i.i.d. Gaussian coordinate rows."""

    def __init__(self, F: GaussPoly | ChaosVector, stream_id: int = 0, dim: int | None = None):
        self.vector = isinstance(F, ChaosVector)
        comps = list(F) if self.vector else [F]
        self.d = len(comps)
        self.dim = max(max((c.max_index for c in comps), default=0), 1) if dim is None else dim
        self.stream_id = stream_id
        self.chunk_rows = default_chunk_rows(self.dim)
        self._values = CompiledPolys(comps, self.dim)
        self._gamma = None
        self._hess = None
        self._comps = comps

    def _gamma_eval(self):
        if self._gamma is None:
            if self.vector:
                M = malliavin_matrix(self._comps)
                self._gamma = CompiledPolys([e for row in M.entries for e in row], self.dim)
            else:
                F = self._comps[0]
                self._gamma = CompiledPolys([gamma(F, F)], self.dim)
        return self._gamma

    def _hess_eval(self):
        if self._hess is None:
            if self.vector:
                raise ValueError("hessian spectra are defined for scalar functionals only")
            H = hessian(self._comps[0], self.dim)
            self._hess = CompiledPolys([e for row in H.entries for e in row], self.dim)
        return self._hess

    def draw(self, seed, row0, rows, wants):
        X = normal_rows(seed, self.stream_id, row0, rows, self.dim)
        v = self._values(X)
        out = {"values": v if self.vector else v[:, 0]}
        if "gamma" in wants:
            g = self._gamma_eval()(X)
            out["gamma"] = g.reshape(rows, self.d, self.d) if self.vector else g[:, 0]
        if "hessian_spectrum" in wants:
            H = self._hess_eval()(X).reshape(rows, self.dim, self.dim)
            out["spectra"] = np.linalg.eigvalsh(H)
        return out


class ScoreSampler(PolySampler):
    """Scalar functional plus its score kernel ``Z = (m F G + Gamma[F, G]) / G^2``, ``G = Gamma[F, F]``.

    ``F``, ``G`` and ``Gamma[F, G]`` are compiled separately and combined
    numerically, which avoids expanding the product ``F G``.  The kernel
    values land in ``SampleBatch.extras["score"]``.
    """

    def __init__(self, F: GaussPoly, m: int, stream_id: int = 0):
        super().__init__(F, stream_id)
        if F.is_constant():
            raise ValueError("score kernel needs a non-constant F")
        G = gamma(F, F)
        self.m = int(m)
        self._parts = CompiledPolys([G, gamma(F, G)], self.dim)

    def draw(self, seed, row0, rows, wants):
        X = normal_rows(seed, self.stream_id, row0, rows, self.dim)
        F = self._values(X)[:, 0]
        P = self._parts(X)
        G, H = P[:, 0], P[:, 1]
        out = {"values": F, "score": (self.m * F * G + H) / (G * G)}
        if "gamma" in wants:
            out["gamma"] = G
        return out


@dataclass
class SampleBatch:
    seed: int
    size: int
    values: np.ndarray
    gamma_values: np.ndarray | None = None
    spectra: np.ndarray | None = None
    nan_count: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def univariate(self) -> bool:
        return self.values.ndim == 1

    def finite_values(self) -> np.ndarray:
        v = self.values
        if v.ndim == 1:
            return v[np.isfinite(v)]
        return v[np.all(np.isfinite(v), axis=1)]

    def to_csv(self, path=None) -> str:
        """``index,value[,gamma]`` for univariate batches with scalar gamma."""
        if not self.univariate:
            raise ValueError("CSV export covers univariate batches")
        with_gamma = self.gamma_values is not None and self.gamma_values.ndim == 1
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "value", "gamma"] if with_gamma else ["index", "value"])
        for i in range(self.size):
            row = [i, repr(float(self.values[i]))]
            if with_gamma:
                row.append(repr(float(self.gamma_values[i])))
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _as_sampler(F) -> Sampler:
    if isinstance(F, Sampler):
        return F
    if isinstance(F, (GaussPoly, ChaosVector)):
        return PolySampler(F)
    raise TypeError(f"cannot sample from {type(F).__name__}")


def sample_batch(
    F,
    n: int,
    seed: int,
    wants: Sequence[str] = (),
    workers: int = 1,
    chunk_rows: int | None = None,
) -> SampleBatch:
    """Draw ``n`` samples of ``F`` (GaussPoly, ChaosVector or :class:`Sampler`).

    ``wants`` may contain ``"gamma"`` and ``"hessian_spectrum"``.  Output is
    identical for any ``workers``: chunks are fixed by ``chunk_rows`` and
    concatenated in order.  Non-finite evaluations become NaN and are counted.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    wants = frozenset(wants)
    unknown = wants - {"gamma", "hessian_spectrum"}
    if unknown:
        raise ValueError(f"unknown wants: {sorted(unknown)}")
    sampler = _as_sampler(F)
    step = chunk_rows or sampler.chunk_rows
    if step % 4:
        raise ValueError("chunk_rows must be a multiple of 4")
    starts = list(range(0, n, step))

    def job(r0):
        return sampler.draw(seed, r0, min(step, n - r0), wants)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, starts))
    else:
        parts = [job(r0) for r0 in starts]

    def cat(key):
        if key not in parts[0]:
            return None
        return np.concatenate([p[key] for p in parts], axis=0)

    values = cat("values")
    g = cat("gamma")
    spectra = cat("spectra")
    bad = ~np.isfinite(values) if values.ndim == 1 else ~np.all(np.isfinite(values.reshape(n, -1)), axis=1)
    if g is not None:
        gbad = ~np.isfinite(g) if g.ndim == 1 else ~np.all(np.isfinite(g.reshape(n, -1)), axis=1)
        g = g.copy()
        g[gbad] = np.nan
        bad |= gbad
    values = values.astype(float, copy=True)
    values[bad] = np.nan
    extras = {k: cat(k) for k in parts[0] if k not in ("values", "gamma", "spectra")}
    return SampleBatch(
        seed=int(seed),
        size=int(n),
        values=values,
        gamma_values=g,
        spectra=spectra,
        nan_count=int(bad.sum()),
        extras=extras,
    )

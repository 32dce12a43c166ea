"""Random-matrix functionals: GOE trace moments and Wishart-type inverse determinants."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from ..gausspoly import DEFAULT_TERM_BUDGET, GaussPoly, SymbolicBudgetExceeded, poly_sum
from ..malliavin import PolyMatrix
from ..montecarlo.estimators import block_bootstrap_se
from ..montecarlo.sampling import Sampler, default_chunk_rows, sample_batch
from ..montecarlo.streams import PURPOSE_GAMMA, generator, normal_rows

PSD_FLOOR = -1e-8


def semicircle_moment(p: int) -> float:
    """``(1/2pi) int_{-2}^{2} x^p sqrt(4 - x^2) dx``; odd ``p`` gives exactly 0."""
    if p < 0:
        raise ValueError("p must be >= 0")
    if p % 2:
        return 0.0
    val, _ = quad(lambda x: x**p, -2.0, 2.0, weight="alg", wvar=(0.5, 0.5), epsabs=0.0, epsrel=1e-13, limit=200)
    return val / (2.0 * math.pi)


@dataclass(frozen=True)
class MatrixFunctionalSpec:
    family: str  # "goe" or "wishart"
    n: int
    p: int
    backend: str = "sampling"  # "symbolic" or "sampling"
    q: int = 1

    def __post_init__(self):
        if self.family not in ("goe", "wishart"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.backend not in ("symbolic", "sampling"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be >= 1")


def goe_index(i: int, j: int, n: int) -> int:
    """1-based coordinate of ``G_{i,j}`` (``i <= j``, 1-based), upper triangle row by row."""
    if i > j:
        i, j = j, i
    return (i - 1) * (2 * n - i + 2) // 2 + (j - i) + 1


def goe_dimension(n: int) -> int:
    return n * (n + 1) // 2


def goe_matrix_poly(n: int) -> PolyMatrix:
    """``A_n``: diagonal ``sqrt(2/n) G_ii``, off-diagonal ``G_ij / sqrt(n)``."""
    d, o = math.sqrt(2.0 / n), 1.0 / math.sqrt(n)
    rows = [
        [GaussPoly.coordinate(goe_index(i, j, n), d if i == j else o) for j in range(1, n + 1)]
        for i in range(1, n + 1)
    ]
    return PolyMatrix(rows)


def goe_trace_poly(n: int, p: int, budget: int = DEFAULT_TERM_BUDGET) -> GaussPoly:
    """``tr(A_n^p) - n c_p`` expanded symbolically."""
    walks = n**p
    if walks > budget:
        raise SymbolicBudgetExceeded(walks, budget)
    A = goe_matrix_poly(n)
    M = [list(r) for r in A.entries]
    for _ in range(p - 1):
        M = [
            [poly_sum(M[i][k] * A[k, j] for k in range(n)) for j in range(n)]
            for i in range(n)
        ]
    tr = poly_sum(M[i][i] for i in range(n))
    return tr - n * semicircle_moment(p)


def goe_matrices(X: np.ndarray, n: int) -> np.ndarray:
    """Stack of GOE matrices from rows of ``n(n+1)/2`` coordinates in :func:`goe_index` order."""
    rows = X.shape[0]
    iu = np.triu_indices(n)
    A = np.zeros((rows, n, n))
    A[:, iu[0], iu[1]] = X / math.sqrt(n)
    A = A + np.transpose(A, (0, 2, 1))
    # diagonal got doubled: 2 G_ii/sqrt(n), want sqrt(2/n) G_ii
    idx = np.arange(n)
    A[:, idx, idx] *= 1.0 / math.sqrt(2.0)
    return A


def _tridiagonal_traces(d: np.ndarray, b: np.ndarray, powers: Sequence[int]) -> dict:
    """``tr(T^k)`` for symmetric tridiagonal ``T`` (rows of diagonals ``d``, off-diagonals ``b``)."""
    rows, n = d.shape
    top = max(powers)
    if top <= 2:
        direct = {1: d.sum(axis=1), 2: (d * d).sum(axis=1) + 2.0 * (b * b).sum(axis=1)}
        return {k: direct[k] for k in powers}
    W = top
    # band[:, W + o, i] = (T^k)_{i, i+o}
    pad = lambda v: np.concatenate([np.zeros((rows, W + 1)), v, np.zeros((rows, W + 1))], axis=1)
    dpad = pad(d)
    upad = pad(np.concatenate([np.zeros((rows, 1)), b], axis=1))  # T[j-1, j]
    lpad = pad(np.concatenate([b, np.zeros((rows, 1))], axis=1))  # T[j+1, j]
    i = np.arange(n)
    valid = np.zeros((2 * W + 1, n), dtype=bool)
    for o in range(-W, W + 1):
        valid[W + o] = (i + o >= 0) & (i + o < n)
    band = np.zeros((rows, 2 * W + 1, n))
    band[:, W, :] = 1.0
    out = {}
    for k in range(1, top + 1):
        new = np.zeros_like(band)
        for o in range(-min(k, W), min(k, W) + 1):
            col = W + 1 + i + o  # index into padded column arrays
            acc = band[:, W + o, :] * dpad[:, col]
            if o - 1 >= -W:
                acc = acc + band[:, W + o - 1, :] * upad[:, col]
            if o + 1 <= W:
                acc = acc + band[:, W + o + 1, :] * lpad[:, col]
            new[:, W + o, :] = np.where(valid[W + o], acc, 0.0)
        band = new
        if k in powers:
            out[k] = band[:, W, :].sum(axis=1)
    return out


class GOESampler(Sampler):
    """Samples ``tr(A_n^p) - n c_p`` and its square field.

    ``method="tridiagonal"`` uses the orthogonally equivalent tridiagonal
    model (diagonal ``N(0, 2)``, off-diagonals ``chi_{n-1}, ..., chi_1``,
    scaled by ``n^{-1/2}``), drawing the chi variates per fixed chunk.
    ``method="dense"`` builds the full matrix from the symbolic coordinate
    layout.  ``Gamma = (2 p^2 / n) tr(A^{2p-2})`` in both cases.
    """

    def __init__(self, n: int, p: int, method: str = "tridiagonal", stream_id: int = 0):
        if n < 2:
            raise ValueError("n must be >= 2")
        if method not in ("tridiagonal", "dense"):
            raise ValueError(f"unknown method {method!r}")
        self.n, self.p, self.method, self.stream_id = n, p, method, stream_id
        self.cp = semicircle_moment(p)
        top = max(p, 2 * p - 2)
        if method == "dense":
            self.dim = goe_dimension(n)
            self.chunk_rows = max(4, min(default_chunk_rows(self.dim), (1 << 21) // (n * n)) // 4 * 4)
        else:
            self.dim = n
            self.chunk_rows = max(4, ((1 << 21) // ((2 * top + 1) * n)) // 4 * 4)
        self.fixed_chunks = method == "tridiagonal"

    def draw(self, seed, row0, rows, wants):
        n, p = self.n, self.p
        powers = {p, 2 * p - 2} - {0}
        if self.method == "dense":
            A = goe_matrices(normal_rows(seed, self.stream_id, row0, rows, self.dim), n)
            ev = np.linalg.eigvalsh(A)
            tr = {k: (ev**k).sum(axis=1) for k in powers}
        else:
            if row0 % self.chunk_rows:
                raise ValueError("tridiagonal GOE draws must start on a chunk boundary")
            d = math.sqrt(2.0) * normal_rows(seed, self.stream_id, row0, rows, n)
            dof = np.arange(n - 1, 0, -1, dtype=float)
            g = generator(seed, self.stream_id, row0 // self.chunk_rows, PURPOSE_GAMMA)
            b = np.sqrt(2.0 * g.standard_gamma(dof / 2.0, size=(rows, n - 1)))
            raw = _tridiagonal_traces(d, b, sorted(powers)) if powers else {}
            tr = {k: v / n ** (k / 2.0) for k, v in raw.items()}
        out = {"values": tr[p] - n * self.cp}
        if "gamma" in wants:
            t = tr[2 * p - 2] if p > 1 else np.full(rows, float(n))
            out["gamma"] = (2.0 * p * p / n) * t
        return out


def goe_functional(spec: MatrixFunctionalSpec, budget: int = DEFAULT_TERM_BUDGET):
    """GaussPoly (symbolic backend) or :class:`GOESampler` (sampling backend)."""
    if spec.family != "goe":
        raise ValueError("goe_functional needs family='goe'")
    if spec.backend == "symbolic":
        try:
            return goe_trace_poly(spec.n, spec.p, budget)
        except SymbolicBudgetExceeded as exc:
            raise SymbolicBudgetExceeded(exc.needed, exc.budget) from None
    return GOESampler(spec.n, spec.p)


# --------------------------------------------------------------------------
# Wishart-type matrices A = B^T B with first-chaos entries
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EntrySpec:
    """``B[j, k] = offset[j, k] + sum_c C[j, k, c] N_c`` (first-chaos entries)."""

    C: np.ndarray
    offset: np.ndarray

    @classmethod
    def iid(cls, rows: int, cols: int, scale: float) -> "EntrySpec":
        C = np.zeros((rows, cols, rows * cols))
        for j in range(rows):
            for k in range(cols):
                C[j, k, j * cols + k] = scale
        return cls(C, np.zeros((rows, cols)))

    @classmethod
    def from_polys(cls, B: PolyMatrix) -> "EntrySpec":
        rows, cols = B.shape
        K = max((B[j, k].max_index for j in range(rows) for k in range(cols)), default=0)
        C = np.zeros((rows, cols, K))
        off = np.zeros((rows, cols))
        for j in range(rows):
            for k in range(cols):
                for mono, c in B[j, k].from_wick().items():
                    if not mono:
                        off[j, k] = c
                    elif len(mono) == 1 and mono[0][1] == 1:
                        C[j, k, mono[0][0] - 1] = c
                    else:
                        raise ValueError(f"entry ({j}, {k}) is not a first-chaos functional")
        return cls(C, off)

    @property
    def shape(self):
        return self.offset.shape

    @property
    def field_dim(self) -> int:
        return self.C.shape[2]


class WishartSampler(Sampler):
    """Draws ``A = B^T B`` and ``Gamma(F)`` for ``F = B^T G`` with an independent ``G in R^rows``.

    ``Gamma(F) = B^T B + K^T K`` where ``K[c, k] = sum_j C[j, k, c] G_j``.
    For i.i.d. entries the field part is generated directly as ``scale * N``.
    Values are ``det(A)``; ``gamma`` holds ``Gamma(F)`` matrices and
    ``extras["domination_floor"]`` the smallest eigenvalue of ``Gamma(F) - A``.
    """

    def __init__(self, entries: EntrySpec | None, rows: int, cols: int, scale: float = 1.0, stream_id: int = 0):
        self.entries, self.rows_, self.cols = entries, rows, cols
        self.stream_id = stream_id
        self.scale = scale
        field = rows * cols if entries is None else entries.field_dim
        self.dim = field + rows
        self.chunk_rows = default_chunk_rows(self.dim)

    def draw(self, seed, row0, rows, wants):
        X = normal_rows(seed, self.stream_id, row0, rows, self.dim)
        n, p = self.rows_, self.cols
        N, G = X[:, : self.dim - n], X[:, self.dim - n:]
        if self.entries is None:
            B = self.scale * N.reshape(rows, n, p)
            K = self.scale * G[:, :, None, None] * np.eye(p)[None, None, :, :]  # (rows, n, p, p), field index (j, k)
            K = K.reshape(rows, n * p, p)
        else:
            B = self.entries.offset[None] + np.einsum("jkc,rc->rjk", self.entries.C, N)
            K = np.einsum("jkc,rj->rck", self.entries.C, G)
        A = np.einsum("rjk,rjl->rkl", B, B)
        M = np.einsum("rck,rcl->rkl", K, K)
        Gam = A + M
        floor = np.linalg.eigvalsh(Gam - A)[:, 0]
        out = {"values": np.linalg.det(A), "domination_floor": floor}
        if "gamma" in wants:
            out["gamma"] = Gam
        return out


@dataclass(frozen=True)
class WishartReport:
    rows: int
    cols: int
    q: int
    samples: int
    mean_inv_det: float
    stderr: float
    domination_fraction: float
    domination_floor: float
    nonpositive: int


def wishart_experiment(
    rows: int,
    cols: int,
    q: int,
    samples: int,
    seed: int,
    entries: PolyMatrix | EntrySpec | str = "iid",
    scale: float | None = None,
    workers: int = 1,
    stream_id: int = 0,
) -> WishartReport:
    """Monte Carlo ``E[det A^{-q}]`` with the per-sample check ``Gamma(F) >= A``.

    ``entries="iid"`` uses independent ``scale * N`` entries (default
    ``scale = rows^{-1/2}``); otherwise a PolyMatrix or :class:`EntrySpec`
    of first-chaos entries, used as given.
    """
    if cols > rows:
        raise ValueError(f"cols={cols} > rows={rows}: A is singular almost surely")
    if isinstance(entries, str):
        if entries != "iid":
            raise ValueError(f"unknown entry spec {entries!r}")
        spec = None
        scale = 1.0 / math.sqrt(rows) if scale is None else scale
    else:
        spec = entries if isinstance(entries, EntrySpec) else EntrySpec.from_polys(entries)
        if spec.shape != (rows, cols):
            raise ValueError(f"entry spec has shape {spec.shape}, expected {(rows, cols)}")
        scale = 1.0
    b = sample_batch(WishartSampler(spec, rows, cols, scale, stream_id), samples, seed, workers=workers)
    det = b.values
    ok = np.isfinite(det) & (det > 0)
    t = det[ok] ** (-float(q))
    floor = b.extras["domination_floor"]
    return WishartReport(
        rows=rows,
        cols=cols,
        q=q,
        samples=samples,
        mean_inv_det=float(t.mean()),
        stderr=block_bootstrap_se(t, seed),
        domination_fraction=float(np.mean(floor >= PSD_FLOOR)),
        domination_floor=float(floor.min()),
        nonpositive=int((~ok).sum()),
    )


def wishart_trajectory(n_list: Sequence[int], cols: int, q: int, samples: int, seed: int, workers: int = 1) -> list[WishartReport]:
    """:func:`wishart_experiment` with i.i.d. ``n^{-1/2}`` entries across ``n_list``."""
    return [wishart_experiment(n, cols, q, samples, seed, "iid", workers=workers) for n in n_list]

"""Vectorized evaluation of several GaussPolys on a block of sample rows.

Monomials shared by the polynomials are evaluated once.  Monomials with the
same exponent pattern (e.g. every ``N_i N_j``) are gathered and evaluated as
one array operation, and a sparse coefficient matrix maps the feature block
to the outputs.
"""
from __future__ import annotations

from collections import defaultdict
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ..gausspoly import GaussPoly


class CompiledPolys:
    def __init__(self, polys: Sequence[GaussPoly], dim: int | None = None):
        self.count = len(polys)
        monos: dict = {}
        rows, cols, data = [], [], []
        for p_idx, F in enumerate(polys):
            for mono, c in F.from_wick().items():
                j = monos.setdefault(mono, len(monos))
                rows.append(j)
                cols.append(p_idx)
                data.append(c)
        self.max_index = max((i for m in monos for i, _ in m), default=0)
        self.dim = self.max_index if dim is None else dim
        if self.dim < self.max_index:
            raise ValueError(f"dim {self.dim} < max coordinate index {self.max_index}")
        # group by exponent pattern; order inside a pattern follows first appearance
        groups: dict = defaultdict(list)
        for mono, j in monos.items():
            pattern = tuple(e for _, e in mono)
            groups[pattern].append((j, tuple(i - 1 for i, _ in mono)))
        self._groups = []
        perm = []
        for pattern in sorted(groups):
            members = groups[pattern]
            perm.extend(j for j, _ in members)
            idx = np.array([ix for _, ix in members], dtype=np.intp).reshape(len(members), len(pattern))
            self._groups.append((pattern, idx))
        # reorder coefficient rows to the feature order
        inv = np.empty(len(perm), dtype=np.intp)
        inv[np.array(perm, dtype=np.intp)] = np.arange(len(perm))
        coef = sp.csr_matrix(
            (np.asarray(data, dtype=float), (inv[np.asarray(rows, dtype=np.intp)], np.asarray(cols, dtype=np.intp))),
            shape=(len(monos), self.count),
        )
        self._dense = coef.toarray() if coef.nnz > 0.1 * coef.shape[0] * coef.shape[1] else None
        self._coef = coef

    def __call__(self, X: np.ndarray) -> np.ndarray:
        """Values with shape ``(rows, count)`` for sample rows ``X`` of shape ``(rows, dim)``."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] < self.max_index:
            raise ValueError(f"need rows of length >= {self.max_index}, got shape {X.shape}")
        rows = X.shape[0]
        if not self._groups:
            return np.zeros((rows, self.count))
        feats = []
        with np.errstate(over="ignore", invalid="ignore"):
            for pattern, idx in self._groups:
                if not pattern:
                    feats.append(np.ones((rows, 1)))
                    continue
                block = None
                for r, e in enumerate(pattern):
                    g = X[:, idx[:, r]]
                    if e == 2:
                        g = g * g
                    elif e != 1:
                        g = g**e
                    block = g if block is None else block * g
                feats.append(block)
            Phi = np.hstack(feats) if len(feats) > 1 else feats[0]
            if self._dense is not None:
                return Phi @ self._dense
            return np.asarray((self._coef.T @ Phi.T).T)

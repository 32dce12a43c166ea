"""Counter-based Gaussian streams.

A value is addressed by ``(seed, stream_id, purpose, index)``: the Philox key
is ``(seed, stream_id)`` and the counter block ``index // 4`` sits in word 0
with ``purpose`` in word 1.  Word 2 separates per-chunk generators, whose
own draws advance word 0.  Any slice of a stream can be regenerated on its
own, so chunked or parallel draws reproduce the sequential ones bit-for-bit.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53

# counter word 1 separates independent uses of the same key
PURPOSE_NORMAL = 0
PURPOSE_GAMMA = 1
PURPOSE_BOOTSTRAP = 2
PURPOSE_AUX = 3


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0 or seed > _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def philox(seed: int, stream_id: int, block: int, purpose: int, lane: int = 0) -> np.random.Philox:
    seed = _check_seed(seed)
    key = (int(stream_id) & _MASK64) << 64 | seed
    counter = np.array([block & _MASK64, purpose & _MASK64, lane & _MASK64, 0], dtype=np.uint64)
    return np.random.Philox(key=key, counter=counter)


def uniforms(seed: int, stream_id: int, start: int, count: int, purpose: int = PURPOSE_NORMAL) -> np.ndarray:
    """Open-interval uniforms for global indices ``start .. start+count-1``."""
    if count <= 0:
        return np.empty(0)
    block, skip = divmod(int(start), 4)
    raw = philox(seed, stream_id, block, purpose).random_raw(skip + count)[skip:]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def normals(seed: int, stream_id: int, start: int, count: int, purpose: int = PURPOSE_NORMAL) -> np.ndarray:
    """Standard Gaussians by inverse CDF of :func:`uniforms`."""
    return ndtri(uniforms(seed, stream_id, start, count, purpose))


def normal_rows(seed: int, stream_id: int, row0: int, rows: int, dim: int) -> np.ndarray:
    """Rows ``row0 .. row0+rows-1`` of the conceptual ``(inf, dim)`` Gaussian array."""
    return normals(seed, stream_id, row0 * dim, rows * dim).reshape(rows, dim)


def generator(seed: int, stream_id: int, chunk: int, purpose: int) -> np.random.Generator:
    """A numpy Generator owned by one chunk, for non-Gaussian variates."""
    return np.random.Generator(philox(seed, stream_id, 0, purpose, lane=chunk))

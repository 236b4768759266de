"""Count vectors and edge-count combinatorics.

A count vector is a K-tuple of non-negative integers summing to the number
of vertices it describes; it indexes one class of labellings that share the
same per-label tallies.  Tables over count vectors drop the redundant last
component and live on a dense (K-1)-dimensional grid.
"""
from __future__ import annotations

import math
from itertools import combinations
from typing import Iterator

import numpy as np

CountVector = tuple[int, ...]


def count_vectors(k: int, total: int) -> Iterator[CountVector]:
    """All K-part compositions of ``total``, lexicographically."""
    if k == 1:
        yield (total,)
        return
    for bars in combinations(range(total + k - 1), k - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(total + k - 2 - prev)
        yield tuple(parts)


def num_count_vectors(k: int, total: int) -> int:
    return math.comb(total + k - 1, k - 1)


def edge_count(m: CountVector, k: int, kp: int) -> int:
    """Edges joining label-k and label-kp vertices within one labelling class."""
    if k == kp:
        return m[k] * (m[k] - 1) // 2
    return m[k] * m[kp]


def multinomial(m: CountVector) -> int:
    total = sum(m)
    out = 1
    rem = total
    for c in m:
        out *= math.comb(rem, c)
        rem -= c
    return out


# ---------------------------------------------------------------------------
# dense (K-1)-dimensional grids
#
# A table for |U| = t with K labels is stored as a float64 array of shape
# (t+1,)*(K-1); axis j indexes m_j and the last component is implied,
# m_{K-1} = t - sum(m_0..m_{K-2}).  Grid points whose partial sum exceeds t
# are outside the domain and carry the log-zero sentinel.


def grid_shape(k: int, total: int) -> tuple[int, ...]:
    return (total + 1,) * (k - 1)


def grid_coords(k: int, total: int) -> np.ndarray:
    """(N, K-1) int array of all grid indices for ``grid_shape(k, total)``."""
    shape = grid_shape(k, total)
    idx = np.indices(shape).reshape(k - 1, -1).T
    return np.ascontiguousarray(idx, dtype=np.int64)


def full_vectors(k: int, total: int) -> tuple[np.ndarray, np.ndarray]:
    """Valid full count vectors on the grid.

    Returns ``(vectors, flat_index)``: an (M, K) int matrix of count vectors
    with components summing to ``total``, and the flat position of each in
    the dense grid (C order).
    """
    coords = grid_coords(k, total)
    last = total - coords.sum(axis=1)
    valid = last >= 0
    coords = coords[valid]
    vectors = np.concatenate([coords, (total - coords.sum(axis=1))[:, None]], axis=1)
    flat = np.ravel_multi_index(tuple(coords.T), grid_shape(k, total))
    return vectors, np.asarray(flat, dtype=np.int64)


def flat_index(m: CountVector, total: int) -> int:
    """Flat dense-grid position of a count vector with the given total."""
    k = len(m)
    return int(np.ravel_multi_index(tuple(int(c) for c in m[:-1]), grid_shape(k, total)))

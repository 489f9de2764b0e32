"""Pairwise distance rows and their row-normalized form.

Each row is computed independently with a fixed summation order, so the
streaming form (:func:`normalized_distance_row`, :class:`DistanceRowStream`)
and the materialized form (:func:`full_normalized_matrix`) agree exactly.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import IndexOutOfRange, NegativeEntry, NonFiniteEntry
from .model import Embedding, NormalizedDistanceRow
from .parallel import resolve_threads


def _check_index(e: Embedding, i) -> int:
    i = int(i)
    if not 0 <= i < e.n:
        raise IndexOutOfRange(f"sample index {i} outside [0, {e.n})")
    return i


def distance_row(e: Embedding, i: int) -> np.ndarray:
    """Euclidean distances from sample ``i`` to every sample of ``e``."""
    return kernels.backend.distance_row(e.coords, _check_index(e, i))


def normalize_row(row) -> NormalizedDistanceRow:
    """Scale a nonnegative row to unit Euclidean norm.

    An all-zero row maps to the zero vector with ``degenerate=True``. The
    sample index is taken as the position of the first zero entry, which
    for a genuine distance row is its own index.
    """
    row = np.asarray(row, dtype=np.float64)
    if not np.all(np.isfinite(row)):
        raise NonFiniteEntry("distance row contains non-finite entries")
    if np.any(row < 0):
        raise NegativeEntry("distance row contains negative entries")
    values, nrm = kernels.backend.normalize_vector(row)
    zeros = np.flatnonzero(row == 0)
    sample = int(zeros[0]) if zeros.size else -1
    return NormalizedDistanceRow(sample, values, degenerate=nrm == 0.0)


def normalized_distance_row(e: Embedding, i: int) -> NormalizedDistanceRow:
    i = _check_index(e, i)
    values, nrm = kernels.backend.normalized_row(e.coords, i)
    return NormalizedDistanceRow(i, values, degenerate=nrm == 0.0)


def full_normalized_matrix(e: Embedding, threads: int | None = None) -> np.ndarray:
    """Materialized n x n row-normalized distance matrix."""
    return kernels.backend.normalized_matrix(e.coords, resolve_threads(threads))


def full_distance_matrix(e: Embedding) -> np.ndarray:
    return np.stack([distance_row(e, i) for i in range(e.n)])


class DistanceRowStream:
    """Iterate the normalized distance rows of an embedding in index order.

    Only one row is held at a time.
    """

    def __init__(self, source: Embedding):
        self.source = source
        self.cursor = 0

    def __iter__(self):
        return self

    def __next__(self) -> NormalizedDistanceRow:
        if self.cursor >= self.source.n:
            raise StopIteration
        row = normalized_distance_row(self.source, self.cursor)
        self.cursor += 1
        return row

    def __len__(self):
        return self.source.n

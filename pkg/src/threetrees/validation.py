"""Input checks shared by the estimator and the harness."""

from __future__ import annotations

import numpy as np

from .complex import TotalComplex
from .exceptions import UnknownVertexError


def check_complex(obj) -> TotalComplex:
    if not isinstance(obj, TotalComplex):
        raise TypeError(f"expected a TotalComplex, got {type(obj).__name__}")
    return obj


def check_vertex_ids(ids, n: int) -> np.ndarray:
    """Coerce to a 1-d int64 array of ids in ``0..n-1``."""
    arr = np.asarray(ids)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d array of vertex ids, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        raise TypeError(f"vertex ids must be integers, got {arr.dtype}")
    arr = arr.astype(np.int64, copy=False)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise UnknownVertexError(f"vertex ids must lie in 0..{n - 1}")
    return arr


def check_pairs(pairs, n: int) -> np.ndarray:
    arr = np.asarray(pairs)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"pairs must have shape (m, 2), got {arr.shape}")
    return check_vertex_ids(arr.ravel(), n).reshape(-1, 2)

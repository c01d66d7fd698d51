"""Distance and counting kernels used by the reordering and evaluation stages.

Two interchangeable backends compute the same functions over integer arrays:

* ``numba`` -- @njit-compiled loops (the default when numba is importable).
* ``numpy`` -- vectorized row sweeps, used as the fallback.

Set ``WDNAMES_NO_NUMBA=1`` to force the numpy backend. The active backend is
resolved once, on first use; ``benchmarks/bench_kernels.py`` compares both.
"""

from __future__ import annotations

import os
from typing import Callable, NamedTuple

import numpy as np


def codepoints(s: str) -> np.ndarray:
    """Unicode scalar values of a string as an int32 array."""
    return np.fromiter(map(ord, s), dtype=np.int32, count=len(s))


class Backend(NamedTuple):
    name: str
    levenshtein: Callable[[np.ndarray, np.ndarray], int]
    lcs_length: Callable[[np.ndarray, np.ndarray], int]
    crossing_count: Callable[[np.ndarray, np.ndarray], int]


def numba_disabled() -> bool:
    return os.environ.get("WDNAMES_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _levenshtein_np(a: np.ndarray, b: np.ndarray) -> int:
    m, n = a.shape[0], b.shape[0]
    if m == 0:
        return n
    if n == 0:
        return m
    idx = np.arange(n + 1, dtype=np.int64)
    prev = idx.copy()
    row = np.empty(n + 1, dtype=np.int64)
    for i in range(1, m + 1):
        # Row without the left-neighbor term; the in-row dependency
        # cur[j] = min(t[j], cur[j-1] + 1) collapses to a running minimum
        # of t[k] - k because insertions cost 1 per step.
        row[0] = i
        np.minimum(prev[1:] + 1, prev[:-1] + (a[i - 1] != b), out=row[1:])
        cur = np.minimum.accumulate(row - idx) + idx
        prev, row = cur, prev
    return int(prev[n])


def _lcs_length_np(a: np.ndarray, b: np.ndarray) -> int:
    m, n = a.shape[0], b.shape[0]
    if m == 0 or n == 0:
        return 0
    prev = np.zeros(n + 1, dtype=np.int64)
    for i in range(m):
        # On a match the diagonal+1 value dominates both neighbors, so the
        # in-row max propagation reduces to a cumulative maximum.
        base = np.maximum(np.where(b == a[i], prev[:-1] + 1, 0), prev[1:])
        prev = np.concatenate(([0], np.maximum.accumulate(base)))
    return int(prev[n])


def _crossing_count_np(src: np.ndarray, tgt: np.ndarray) -> int:
    k = src.shape[0]
    if k < 2:
        return 0
    ds = src[:, None] - src[None, :]
    dt = tgt[:, None] - tgt[None, :]
    crossing = (ds * dt) < 0
    return int(np.count_nonzero(np.triu(crossing, k=1)))


_NUMPY = Backend("numpy", _levenshtein_np, _lcs_length_np, _crossing_count_np)


def numpy_backend() -> Backend:
    return _NUMPY


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

_numba: Backend | None = None


def numba_backend() -> Backend:
    """Build (and memoize) the JIT-compiled backend. Raises ImportError without numba."""
    global _numba
    if _numba is not None:
        return _numba

    from numba import njit

    @njit(cache=True, nogil=True)
    def _levenshtein_nb(a, b):  # pragma: no cover - exercised via dispatch
        m, n = a.shape[0], b.shape[0]
        prev = np.arange(n + 1, dtype=np.int64)
        cur = np.empty(n + 1, dtype=np.int64)
        for i in range(1, m + 1):
            cur[0] = i
            for j in range(1, n + 1):
                d = prev[j] + 1
                if cur[j - 1] + 1 < d:
                    d = cur[j - 1] + 1
                dd = prev[j - 1] + (0 if a[i - 1] == b[j - 1] else 1)
                if dd < d:
                    d = dd
                cur[j] = d
            prev, cur = cur, prev
        return prev[n]

    @njit(cache=True, nogil=True)
    def _lcs_length_nb(a, b):  # pragma: no cover - exercised via dispatch
        m, n = a.shape[0], b.shape[0]
        prev = np.zeros(n + 1, dtype=np.int64)
        cur = np.zeros(n + 1, dtype=np.int64)
        for i in range(1, m + 1):
            cur[0] = 0
            for j in range(1, n + 1):
                if a[i - 1] == b[j - 1]:
                    cur[j] = prev[j - 1] + 1
                else:
                    cur[j] = max(prev[j], cur[j - 1])
            prev, cur = cur, prev
        return prev[n]

    @njit(cache=True, nogil=True)
    def _crossing_count_nb(src, tgt):  # pragma: no cover - exercised via dispatch
        k = src.shape[0]
        total = 0
        for i in range(k):
            for j in range(i + 1, k):
                if (src[i] - src[j]) * (tgt[i] - tgt[j]) < 0:
                    total += 1
        return total

    _numba = Backend(
        "numba",
        lambda a, b: int(_levenshtein_nb(a, b)),
        lambda a, b: int(_lcs_length_nb(a, b)),
        lambda s, t: int(_crossing_count_nb(s, t)),
    )
    return _numba


# ---------------------------------------------------------------------------
# active backend dispatch
# ---------------------------------------------------------------------------

_active: Backend | None = None


def active_backend() -> Backend:
    global _active
    if _active is None:
        if numba_disabled():
            _active = numpy_backend()
        else:
            try:
                _active = numba_backend()
            except ImportError:
                _active = numpy_backend()
    return _active


def levenshtein(a: np.ndarray, b: np.ndarray) -> int:
    return active_backend().levenshtein(a, b)


def lcs_length(a: np.ndarray, b: np.ndarray) -> int:
    return active_backend().lcs_length(a, b)


def crossing_count(src: np.ndarray, tgt: np.ndarray) -> int:
    return active_backend().crossing_count(src, tgt)


def warm_up() -> str:
    """Force backend resolution (and JIT compilation); returns the backend name."""
    backend = active_backend()
    a = codepoints("ab")
    b = codepoints("ba")
    backend.levenshtein(a, b)
    backend.lcs_length(a, b)
    e = np.array([0, 1], dtype=np.int64)
    backend.crossing_count(e, e[::-1].copy())
    return backend.name

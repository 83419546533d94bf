"""Integer-array kernels behind ROUGE: LCS length and clipped multiset overlap.

Two interchangeable backends. ``TODSUMKIT_KERNELS=numpy`` forces the pure-numpy
path; otherwise numba is used when it imports. Both take int64 arrays.
"""
from __future__ import annotations

import os

import numpy as np


def lcs_length_numpy(a: np.ndarray, b: np.ndarray) -> int:
    if a.size == 0 or b.size == 0:
        return 0
    if a.size < b.size:
        a, b = b, a
    # row recurrence as a running max over candidate cells: O(len(b)) memory
    prev = np.zeros(b.size + 1, dtype=np.int64)
    for x in a:
        cand = prev.copy()
        hit = np.flatnonzero(b == x) + 1
        if hit.size:
            cand[hit] = np.maximum(prev[hit], prev[hit - 1] + 1)
        prev = np.maximum.accumulate(cand)
    return int(prev[-1])


def clipped_overlap_numpy(a: np.ndarray, b: np.ndarray) -> int:
    """Size of the multiset intersection of ``a`` and ``b``."""
    if a.size == 0 or b.size == 0:
        return 0
    ua, ca = np.unique(a, return_counts=True)
    ub, cb = np.unique(b, return_counts=True)
    _, ia, ib = np.intersect1d(ua, ub, assume_unique=True, return_indices=True)
    return int(np.minimum(ca[ia], cb[ib]).sum())


try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None
    HAS_NUMBA = False
else:
    HAS_NUMBA = True

if HAS_NUMBA:

    @njit(cache=True)
    def lcs_length_numba(a, b):
        if a.size == 0 or b.size == 0:
            return 0
        if a.size < b.size:
            a, b = b, a
        m = b.size
        row = np.zeros(m + 1, dtype=np.int64)
        for i in range(a.size):
            diag = 0
            x = a[i]
            for j in range(1, m + 1):
                up = row[j]
                if x == b[j - 1]:
                    row[j] = diag + 1
                elif row[j - 1] > up:
                    row[j] = row[j - 1]
                diag = up
        return row[m]

    @njit(cache=True)
    def _merge_count(sa, sb):
        i = 0
        j = 0
        n = 0
        while i < sa.size and j < sb.size:
            if sa[i] == sb[j]:
                n += 1
                i += 1
                j += 1
            elif sa[i] < sb[j]:
                i += 1
            else:
                j += 1
        return n

    def clipped_overlap_numba(a: np.ndarray, b: np.ndarray) -> int:
        if a.size == 0 or b.size == 0:
            return 0
        return int(_merge_count(np.sort(a), np.sort(b)))

else:  # pragma: no cover
    lcs_length_numba = None
    clipped_overlap_numba = None


def _select_backend() -> str:
    want = os.environ.get("TODSUMKIT_KERNELS", "").strip().lower()
    if want == "numpy" or not HAS_NUMBA:
        return "numpy"
    return "numba"


BACKEND = _select_backend()

if BACKEND == "numba":
    def lcs_length(a: np.ndarray, b: np.ndarray) -> int:
        return int(lcs_length_numba(a, b))

    clipped_overlap = clipped_overlap_numba
else:
    lcs_length = lcs_length_numpy
    clipped_overlap = clipped_overlap_numpy

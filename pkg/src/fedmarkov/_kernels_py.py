"""Numpy fallback for the hot kernels.

Both backends must produce bit-identical results: counts are exact integers,
and every candidate score in the path decoder is a single product of the same
doubles, compared with strict ``>`` and first-max (lowest index) tie-breaking,
so the compiled twin in ``_ckernels.pyx`` traces identical paths.
"""

from __future__ import annotations

import numpy as np


def count_pairs(bins: np.ndarray, n: int, lag: int) -> np.ndarray:
    """Count observed (t, t+lag) bin pairs over a (records, features, windows) grid.

    ``bins`` holds bin indices with -1 for missing; pairs with either endpoint
    missing contribute nothing.  Returns int64 counts of shape (features, n, n).
    """
    bins = np.asarray(bins, dtype=np.int64)
    r, f, w = bins.shape
    out = np.zeros((f, n, n), dtype=np.int64)
    if r == 0 or w <= lag:
        return out
    src = bins[:, :, : w - lag]
    dst = bins[:, :, lag:]
    valid = (src >= 0) & (dst >= 0)
    f_idx = np.broadcast_to(np.arange(f, dtype=np.int64)[None, :, None], src.shape)
    flat = (f_idx[valid] * n + src[valid]) * n + dst[valid]
    counted = np.bincount(flat, minlength=f * n * n)
    return counted.reshape(f, n, n).astype(np.int64)


def gap_path(T: np.ndarray, left: int, right: int, length: int) -> np.ndarray:
    """Max-product decode of the most probable bin path across a gap.

    With ``left >= 0`` the chain is anchored on the left (and optionally on the
    right); with ``left < 0`` the caller guarantees ``right >= 0`` and the chain
    is decoded backwards from the right anchor.  Ties resolve to the lowest
    index at every step.
    """
    T = np.asarray(T, dtype=np.float64)
    n = T.shape[0]
    path = np.empty(length, dtype=np.int64)
    if left >= 0:
        dp = T[left].copy()
        back = np.empty((length, n), dtype=np.int64)
        for k in range(1, length):
            cand = dp[:, None] * T
            back[k] = np.argmax(cand, axis=0)
            dp = cand[back[k], np.arange(n)]
        scores = dp * T[:, right] if right >= 0 else dp
        path[length - 1] = np.argmax(scores)
        for k in range(length - 1, 0, -1):
            path[k - 1] = back[k, path[k]]
    else:
        dp = T[:, right].copy()
        nxt = np.empty((length, n), dtype=np.int64)
        for k in range(length - 2, -1, -1):
            cand = T * dp[None, :]
            nxt[k] = np.argmax(cand, axis=1)
            dp = cand[np.arange(n), nxt[k]]
        path[0] = np.argmax(dp)
        for k in range(length - 1):
            path[k + 1] = nxt[k, path[k]]
    return path

"""
Hot loops of the pipeline, in two flavours.

Each kernel has a numba implementation (``*_numba``, compiled with ``@njit``)
and a pure-numpy/Python implementation (``*_numpy``). The public names
(``pair_keys``, ``kruskal_forest``, ``semantic_rows``) are bound at import
time to one of them:

* numba is used when it imports and ``HASHSEM_DISABLE_NUMBA`` is unset/falsy;
* otherwise the numpy path is used.

Both paths produce identical integer results; float results agree to
rounding (the numpy path reduces row norms with pairwise summation).
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("HASHSEM_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

HAVE_NUMBA = numba is not None


# ----------------------------------------------------------------------------
# pair keys: every (i, j), i < j, co-occurring in one user's set -> i * n + j
# ----------------------------------------------------------------------------


def _pair_keys_loop(indptr, indices, n):
    total = 0
    for u in range(indptr.shape[0] - 1):
        k = indptr[u + 1] - indptr[u]
        total += k * (k - 1) // 2
    out = np.empty(total, dtype=np.int64)
    pos = 0
    for u in range(indptr.shape[0] - 1):
        lo = indptr[u]
        hi = indptr[u + 1]
        for a in range(lo, hi):
            i = indices[a]
            for b in range(a + 1, hi):
                out[pos] = i * n + indices[b]
                pos += 1
    return out


def pair_keys_numpy(indptr: np.ndarray, indices: np.ndarray, n: int) -> np.ndarray:
    """Vectorised per set size: users with k hashtags form a (m, k) block."""
    indptr = np.asarray(indptr, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    sizes = np.diff(indptr)
    chunks = []
    for k in np.unique(sizes):
        if k < 2:
            continue
        starts = indptr[:-1][sizes == k]
        block = indices[starts[:, None] + np.arange(k)[None, :]]
        ii, jj = np.triu_indices(int(k), 1)
        chunks.append((block[:, ii] * n + block[:, jj]).ravel())
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks)


# ----------------------------------------------------------------------------
# Kruskal: edges arrive pre-sorted in acceptance order; returns keep-mask
# ----------------------------------------------------------------------------


def _kruskal_loop(n, src, dst):
    parent = np.arange(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    keep = np.zeros(src.shape[0], dtype=np.bool_)
    taken = 0
    for e in range(src.shape[0]):
        if taken == n - 1:
            break
        a = src[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = dst[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
        keep[e] = True
        taken += 1
    return keep


def kruskal_forest_numpy(n: int, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    # union-find has no vectorised form; plain Python over list copies
    parent = list(range(n))
    size = [1] * n
    keep = np.zeros(len(src), dtype=bool)
    taken = 0
    for e, (a, b) in enumerate(zip(np.asarray(src).tolist(), np.asarray(dst).tolist())):
        if taken == n - 1:
            break
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
        keep[e] = True
        taken += 1
    return keep


# ----------------------------------------------------------------------------
# semantic rows: sum of adjacency vectors per user, then L2-normalise
# ----------------------------------------------------------------------------


def _semantic_rows_loop(set_indptr, set_indices, adj_indptr, adj_indices, adj_ratio, n):
    m = set_indptr.shape[0] - 1
    out = np.zeros((m, n), dtype=np.float64)
    empty = np.zeros(m, dtype=np.bool_)
    for u in range(m):
        lo = set_indptr[u]
        hi = set_indptr[u + 1]
        if lo == hi:
            empty[u] = True
            continue
        row = out[u]
        for a in range(lo, hi):
            t = set_indices[a]
            row[t] += 1.0
            for b in range(adj_indptr[t], adj_indptr[t + 1]):
                row[adj_indices[b]] += adj_ratio[b]
        sq = 0.0
        for i in range(n):
            sq += row[i] * row[i]
        norm = np.sqrt(sq)
        for i in range(n):
            row[i] = row[i] / norm
    return out, empty


def semantic_rows_numpy(set_indptr, set_indices, adj_indptr, adj_indices, adj_ratio, n):
    set_indptr = np.asarray(set_indptr, dtype=np.int64)
    set_indices = np.asarray(set_indices, dtype=np.int64)
    adj_indptr = np.asarray(adj_indptr, dtype=np.int64)
    adj_indices = np.asarray(adj_indices, dtype=np.int64)
    m = len(set_indptr) - 1
    out = np.zeros((m, n), dtype=np.float64)
    sizes = np.diff(set_indptr)
    empty = sizes == 0
    if len(set_indices) == 0:
        return out, empty

    # One (row, col, value) entry per self term and per neighbour term, laid
    # out user-major, t ascending, self before neighbours: np.add.at applies
    # them in that order, the same order as the loop kernel.
    owner = np.repeat(np.arange(m), sizes)
    deg = np.diff(adj_indptr)[set_indices]
    per_t = deg + 1
    total = int(per_t.sum())
    starts = np.cumsum(per_t) - per_t
    rows = np.repeat(owner, per_t)
    cols = np.empty(total, dtype=np.int64)
    vals = np.empty(total, dtype=np.float64)
    cols[starts] = set_indices
    vals[starts] = 1.0
    nb_mask = np.ones(total, dtype=bool)
    nb_mask[starts] = False
    # neighbour slots: for each t, adj_indptr[t] .. adj_indptr[t+1]
    offs = np.arange(total) - np.repeat(starts, per_t) - 1
    src = np.repeat(adj_indptr[set_indices], per_t) + offs
    cols[nb_mask] = adj_indices[src[nb_mask]]
    vals[nb_mask] = np.asarray(adj_ratio, dtype=np.float64)[src[nb_mask]]
    np.add.at(out, (rows, cols), vals)

    norms = np.sqrt(np.einsum("ij,ij->i", out, out))
    nz = ~empty
    out[nz] /= norms[nz, None]
    return out, empty


if HAVE_NUMBA:
    pair_keys_numba = numba.njit(cache=True, nogil=True)(_pair_keys_loop)
    kruskal_forest_numba = numba.njit(cache=True, nogil=True)(_kruskal_loop)
    semantic_rows_numba = numba.njit(cache=True, nogil=True)(_semantic_rows_loop)
else:  # pragma: no cover
    pair_keys_numba = kruskal_forest_numba = semantic_rows_numba = None


def _as_i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


if HAVE_NUMBA and not _DISABLED:
    BACKEND = "numba"

    def pair_keys(indptr, indices, n):
        return pair_keys_numba(_as_i64(indptr), _as_i64(indices), int(n))

    def kruskal_forest(n, src, dst):
        return kruskal_forest_numba(int(n), _as_i64(src), _as_i64(dst))

    def semantic_rows(set_indptr, set_indices, adj_indptr, adj_indices, adj_ratio, n):
        return semantic_rows_numba(
            _as_i64(set_indptr),
            _as_i64(set_indices),
            _as_i64(adj_indptr),
            _as_i64(adj_indices),
            np.ascontiguousarray(adj_ratio, dtype=np.float64),
            int(n),
        )

else:
    BACKEND = "numpy"
    pair_keys = pair_keys_numpy
    kruskal_forest = kruskal_forest_numpy
    semantic_rows = semantic_rows_numpy

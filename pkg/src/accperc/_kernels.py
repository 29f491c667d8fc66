"""numba kernels behind the lazy sampler.

Scalar mirrors of accperc.streams (splitmix64 chain); the test suite checks
bit-for-bit agreement.  All kernels are nogil so trial chunks can run on a
thread pool, and deterministic given the root keys they receive.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 2.0**-53


@njit("uint64(uint64)", cache=True, nogil=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit("uint64(uint64, int64)", cache=True, nogil=True, inline="always")
def _child_key(key, index):
    return _mix64(key + _GOLDEN * np.uint64(index + 1))


@njit("float64(uint64)", cache=True, nogil=True, inline="always")
def _unit(key):
    return (key >> np.uint64(11)) * _INV53


@njit("boolean(uint64, int64, int64, float64[:])", cache=True, nogil=True)
def exists_dfs(root_key, n, h, floors):
    """Depth-first search for one strictly increasing root-to-leaf path.

    floors[j] is the minimum admissible label at level j (zeros when
    unrestricted); children are explored in index order and pruned as soon
    as a label fails either the increase or the floor test.
    """
    keys = np.empty(h + 1, np.uint64)
    labels = np.empty(h + 1, np.float64)
    nxt = np.empty(h + 1, np.int64)
    keys[0] = root_key
    labels[0] = -1.0
    nxt[0] = 0
    depth = 0
    while depth >= 0:
        i = nxt[depth]
        if i >= n:
            depth -= 1
            continue
        nxt[depth] += 1
        k = _child_key(keys[depth], i)
        x = _unit(k)
        if x > labels[depth] and x >= floors[depth + 1]:
            if depth + 1 == h:
                return True
            depth += 1
            keys[depth] = k
            labels[depth] = x
            nxt[depth] = 0
    return False


@njit("int64(uint64, int64, int64, float64[:], int64)", cache=True, nogil=True)
def count_dfs(root_key, n, h, floors, cap):
    """Exact count of admissible root-to-leaf paths, saturating at cap."""
    keys = np.empty(h + 1, np.uint64)
    labels = np.empty(h + 1, np.float64)
    nxt = np.empty(h + 1, np.int64)
    keys[0] = root_key
    labels[0] = -1.0
    nxt[0] = 0
    depth = 0
    total = 0
    while depth >= 0:
        i = nxt[depth]
        if i >= n:
            depth -= 1
            continue
        nxt[depth] += 1
        k = _child_key(keys[depth], i)
        x = _unit(k)
        if x > labels[depth] and x >= floors[depth + 1]:
            if depth + 1 == h:
                total += 1
                if total >= cap:
                    return cap
            else:
                depth += 1
                keys[depth] = k
                labels[depth] = x
                nxt[depth] = 0
    return total


@njit("void(uint64[:], int64, int64, float64[:], uint8[:])", cache=True, nogil=True)
def exists_batch(root_keys, n, h, floors, out):
    for t in range(root_keys.shape[0]):
        out[t] = 1 if exists_dfs(root_keys[t], n, h, floors) else 0


@njit("void(uint64[:], int64, int64, float64[:], int64, int64[:])", cache=True, nogil=True)
def count_batch(root_keys, n, h, floors, cap, out):
    for t in range(root_keys.shape[0]):
        out[t] = count_dfs(root_keys[t], n, h, floors, cap)


@njit("void(uint64[:], int64[:], int64, float64[:], uint8[:, :])", cache=True, nogil=True)
def coupled_batch(root_keys, n_values, h, floors, out):
    """Existence indicators for each n in ascending n_values, per trial.

    Labels depend only on (address, child index), so the n-child tree is a
    subtree of the n'-child tree for n < n': once a path exists it exists
    for every larger n and the remaining searches are skipped.
    """
    for t in range(root_keys.shape[0]):
        found = False
        for j in range(n_values.shape[0]):
            if not found:
                found = exists_dfs(root_keys[t], n_values[j], h, floors)
            out[t, j] = 1 if found else 0


@njit("void(uint64, int64, int64, float64, int64[:])", cache=True, nogil=True)
def level_counts(root_key, n, levels, width_eps, out):
    """Count banded subpaths level by level.

    A subpath survives to level j when its label at every level i <= j lies
    in [(i-1)*width_eps/levels, i*width_eps/levels).  Only children of
    surviving level-(j-1) subpaths are examined.
    """
    band = width_eps / levels
    frontier = np.empty(1, np.uint64)
    frontier[0] = root_key
    for j in range(1, levels + 1):
        lo = (j - 1) * band
        hi = j * band
        new = np.empty(frontier.shape[0] * n, np.uint64)
        m = 0
        for p in range(frontier.shape[0]):
            for i in range(n):
                k = _child_key(frontier[p], i)
                x = _unit(k)
                if lo <= x < hi:
                    new[m] = k
                    m += 1
        out[j - 1] = m
        frontier = new[:m]
        if m == 0:
            for rest in range(j, levels):
                out[rest] = 0
            return


@njit("void(uint64[:], int64, int64, float64, int64[:, :])", cache=True, nogil=True)
def level_counts_batch(root_keys, n, levels, width_eps, out):
    for t in range(root_keys.shape[0]):
        level_counts(root_keys[t], n, levels, width_eps, out[t])

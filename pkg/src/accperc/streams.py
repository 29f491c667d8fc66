"""Deterministic hash-derived label streams.

Every vertex of a lazily generated tree owns a 64-bit key obtained by mixing
its parent's key with its child index.  The key doubles as the vertex's
uniform [0,1) label (top 53 bits) and as the seed for its own children, so
the exact enumerator, the lazy sampler and any number of workers all see the
same tree for the same root key without storing anything.  Keys do not
depend on the branching factor, which makes the n-child tree a subtree of
the (n+1)-child tree on the same stream (the coupling used for monotonicity
checks).

Three implementations coexist and must agree bit for bit: masked Python
integers (reference, this module), vectorized numpy uint64 (this module),
and numba scalars (accperc._kernels).  The mixer is the splitmix64 finalizer.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 2.0**-53


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def child_key(key: int, index: int) -> int:
    """Key of the index-th child (0-based) of the vertex with the given key."""
    return mix64((key + GOLDEN * (index + 1)) & MASK64)


def unit(key: int) -> float:
    """Uniform [0,1) label carried by a key (top 53 bits)."""
    return (key >> 11) * _INV53


def derive_key(master: int, *indices: int) -> int:
    """Derive a stream key from a master seed and a chain of indices.

    ``derive_key(seed)`` is the root key for a single run; appending indices
    (point index, trial index, ...) yields independent sub-streams.  The
    chain step is the same mix as ``child_key``, so derived streams are
    reproducible regardless of scheduling.
    """
    k = mix64((master + GOLDEN) & MASK64)
    for ix in indices:
        k = child_key(k, ix)
    return k


# Vectorized variants.  numpy uint64 arithmetic wraps silently for arrays;
# scalars are kept out of the hot paths because they warn on overflow.

_GOLDEN_NP = np.uint64(GOLDEN)
_MIX1_NP = np.uint64(_MIX1)
_MIX2_NP = np.uint64(_MIX2)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _MIX1_NP
    z = (z ^ (z >> np.uint64(27))) * _MIX2_NP
    return z ^ (z >> np.uint64(31))


def child_keys_array(parents: np.ndarray, n: int) -> np.ndarray:
    """Keys of all n children of each parent, parent-major.

    Output index p*n + i is child i of parents[p], matching the level layout
    used by the exact enumerator (the flat index at depth j reads as the
    path address in base n, most significant digit first).
    """
    parents = np.asarray(parents, dtype=np.uint64)
    offsets = _GOLDEN_NP * np.arange(1, n + 1, dtype=np.uint64)
    return mix64_array(parents[:, None] + offsets[None, :]).reshape(-1)


def unit_array(keys: np.ndarray) -> np.ndarray:
    return (np.asarray(keys, dtype=np.uint64) >> np.uint64(11)) * _INV53


def derive_key_array(master: int, indices: np.ndarray) -> np.ndarray:
    """Vectorized ``derive_key(master, i)`` for an array of indices."""
    base = np.uint64(derive_key(master))
    idx = np.asarray(indices, dtype=np.uint64) + np.uint64(1)
    return mix64_array(base + _GOLDEN_NP * idx)

"""Exact and brute-force ground truth on small instances.

Everything here trades scale for certainty: full trees are materialized and
enumerated exhaustively, combinatorial counts use arbitrary-precision
integers, and joint order probabilities are exact rationals.  The lazy
sampler is validated against these routines on shared label streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from . import model
from .errors import SizeExceededError
from .model import ModelParams, PathAddress, ramp_threshold
from .stats import StreamingStats, TrialEstimate
from .streams import child_keys_array, derive_key, derive_key_array, unit_array

#: Hard ceiling on materialized vertices (sum of n^j over levels).
MAX_TREE_VERTICES = 10**7

#: Hard ceiling on the number of distinct ranks in exact order enumeration.
MAX_RANKS = 12


def tree_size(n: int, h: int) -> int:
    """Number of labelled (non-root) vertices in the full tree."""
    return sum(n**j for j in range(1, h + 1))


@dataclass(frozen=True)
class LabelledTree:
    """A fully materialized labelled tree.

    ``levels[j-1]`` holds the n^j labels of depth-j vertices; the flat index
    reads as the path address in base n, most significant digit first, so
    the vertex at address (a1, ..., aj) sits at index a1*n^(j-1) + ... + aj.
    """

    params: ModelParams
    root_key: int
    levels: tuple[np.ndarray, ...]

    @property
    def n_vertices(self) -> int:
        return sum(len(lv) for lv in self.levels)

    def label(self, address: PathAddress) -> float:
        if not 1 <= len(address) <= self.params.h:
            raise ValueError(f"address length {len(address)} outside tree")
        idx = 0
        for a in address:
            if not 0 <= a < self.params.n:
                raise ValueError(f"child index {a} outside [0, {self.params.n})")
            idx = idx * self.params.n + a
        return float(self.levels[len(address) - 1][idx])

    def path_labels(self, address: PathAddress) -> list[float]:
        return [self.label(address[:j]) for j in range(1, len(address) + 1)]


@dataclass(frozen=True)
class ForkSpectrum:
    """counts[k] = number of ordered pairs of counted paths sharing exactly
    their first k vertices, for k = 0..h."""

    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class CountReport:
    """Exact path counts for one tree: all increasing paths, the
    ramp-restricted subset, and the fork spectrum of the restricted set."""

    n_paths: int
    n_restricted: int
    exists: bool
    fork: ForkSpectrum


def sample_full_tree(params: ModelParams, seed: int) -> LabelledTree:
    """Materialize the full labelled tree for the given stream seed.

    The labels are exactly those the lazy sampler would generate for the
    same seed, which is what makes oracle-vs-sampler equivalence checks
    exact rather than statistical.
    """
    if tree_size(params.n, params.h) > MAX_TREE_VERTICES:
        raise SizeExceededError(
            f"tree with n={params.n}, h={params.h} has "
            f"{tree_size(params.n, params.h)} vertices "
            f"(limit {MAX_TREE_VERTICES})"
        )
    root_key = seed & ((1 << 64) - 1)
    levels = []
    parents = np.array([root_key], dtype=np.uint64)
    for _ in range(params.h):
        parents = child_keys_array(parents, params.n)
        levels.append(unit_array(parents))
    return LabelledTree(params=params, root_key=root_key, levels=tuple(levels))


def _increasing_flags(tree: LabelledTree, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-leaf indicators (increasing, increasing-and-on-ramp)."""
    n, h = tree.params.n, tree.params.h
    inc = np.ones(1, dtype=bool)
    ramp = np.ones(1, dtype=bool)
    prev = np.full(1, -1.0)
    for j in range(1, h + 1):
        labels = tree.levels[j - 1]
        up = labels > np.repeat(prev, n)
        inc = np.repeat(inc, n) & up
        ramp = np.repeat(ramp, n) & up & (labels >= ramp_threshold(j, h, eps))
        prev = labels
    return inc, ramp


def _fork_spectrum(restricted: np.ndarray, n: int, h: int) -> ForkSpectrum:
    """Spectrum of ordered pairs of accepted leaves by shared-prefix depth.

    pairs_ge[k] counts ordered pairs agreeing on at least their first k
    indices (grouping leaves by their level-k prefix); differencing gives
    the exact-k counts and pairs_ge[h] is the diagonal.
    """
    r = restricted.astype(np.int64)
    pairs_ge = []
    for k in range(h + 1):
        block = n ** (h - k)
        sums = r.reshape(-1, block).sum(axis=1)
        pairs_ge.append(int((sums * sums).sum()))
    counts = [pairs_ge[k] - pairs_ge[k + 1] for k in range(h)]
    counts.append(pairs_ge[h])
    return ForkSpectrum(counts=tuple(counts))


def count_report(tree: LabelledTree, eps: float = 0.0) -> CountReport:
    """Exhaustive exact counts over every root-to-leaf path."""
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    inc, ramp = _increasing_flags(tree, eps)
    n_paths = int(inc.sum())
    n_restricted = int(ramp.sum())
    fork = _fork_spectrum(ramp, tree.params.n, tree.params.h)
    return CountReport(
        n_paths=n_paths,
        n_restricted=n_restricted,
        exists=n_paths >= 1,
        fork=fork,
    )


def count_by_predicates(tree: LabelledTree, eps: float = 0.0) -> CountReport:
    """Reference recount walking every path through the scalar predicates.

    Deliberately naive (O(n^h * h) plus O(restricted^2) for the spectrum):
    it exercises ``model.in_increasing`` / ``model.in_ramp_region`` /
    ``model.fork_depth`` one path at a time, so any fault injected into
    those predicates shows up as a disagreement with ``count_report``.
    """
    n, h = tree.params.n, tree.params.h
    if n**h > 65536:
        raise SizeExceededError(f"predicate recount limited to n^h <= 65536, got {n**h}")
    accepted: list[PathAddress] = []
    n_paths = 0
    for address in product(range(n), repeat=h):
        labels = tree.path_labels(address)
        if model.in_increasing(labels):
            n_paths += 1
            if model.in_ramp_region(labels, eps, h):
                accepted.append(address)
    counts = [0] * (h + 1)
    for u in accepted:
        for v in accepted:
            counts[model.fork_depth(u, v)] += 1
    return CountReport(
        n_paths=n_paths,
        n_restricted=len(accepted),
        exists=n_paths >= 1,
        fork=ForkSpectrum(counts=tuple(counts)),
    )


def count_pairs_with_fork(n: int, h: int, k: int) -> int:
    """Number of ordered path pairs whose addresses share exactly k levels.

    Exact integer: n^h for the diagonal k = h, otherwise
    n^k * n(n-1) * n^(2(h-k-1)) (choose the shared prefix, the two distinct
    children at the split, then the free tails).
    """
    if not 0 <= k <= h:
        raise ValueError(f"fork depth {k} outside [0, {h}]")
    if k == h:
        return n**h
    return n**k * n * (n - 1) * n ** (2 * (h - k - 1))


def _interleavings(a: int, b: int) -> int:
    """Ways to merge two increasing sequences of lengths a and b, by the
    lattice-path recursion T[i][j] = T[i-1][j] + T[i][j-1]."""
    row = [1] * (b + 1)
    for _ in range(a):
        for j in range(1, b + 1):
            row[j] += row[j - 1]
    return row[b]


def exact_joint_fork_prob(h: int, k: int) -> Fraction:
    """Exact probability that two length-h chains sharing their first k
    labels are both strictly increasing.

    Only the relative order of the 2h - k distinct labels matters, so the
    probability is (number of admissible rank orders) / (2h - k)!.  An
    admissible order gives the k shared labels the k smallest ranks in
    increasing position order (both tails must exceed the shared maximum)
    and splits the remaining ranks into two increasing tails, counted by
    the interleaving recursion.
    """
    if h < 1:
        raise ValueError(f"h must be >= 1, got {h}")
    if not 0 <= k <= h:
        raise ValueError(f"fork depth {k} outside [0, {h}]")
    ranks = 2 * h - k
    if ranks > MAX_RANKS:
        raise SizeExceededError(
            f"rank enumeration needs {ranks} distinct ranks (limit {MAX_RANKS})"
        )
    favorable = _interleavings(h - k, h - k)
    return Fraction(favorable, math.factorial(ranks))


def numeric_joint_ramp_prob(
    h: int, k: int, samples: int, seed: int
) -> TrialEstimate:
    """Monte Carlo estimate that two chains sharing their first k labels are
    both strictly increasing and clear the eps=0 ramp (level-j floor
    (j-1)/h).  Complements the exact rank oracle, which cannot see the
    ramp because the ramp depends on label values, not ranks."""
    if h < 1 or h > 30:
        raise ValueError(f"h must lie in [1, 30], got {h}")
    if not 0 <= k <= h:
        raise ValueError(f"fork depth {k} outside [0, {h}]")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    thresholds = np.array([ramp_threshold(j, h, 0.0) for j in range(1, h + 1)])
    successes = 0
    chunk = max(1, min(samples, 10**6 // max(1, 2 * h - k)))
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        draws = rng.random((m, 2 * h - k))
        u = draws[:, :h]
        v = np.concatenate([draws[:, :k], draws[:, h:]], axis=1)
        ok = np.ones(m, dtype=bool)
        for w in (u, v):
            ok &= np.all(np.diff(w, axis=1) > 0, axis=1)
            ok &= np.all(w >= thresholds, axis=1)
        successes += int(ok.sum())
        done += m
    return TrialEstimate.from_counts(successes, samples)


def _batch_counts(
    params: ModelParams, trials: int, seed: int, eps: float
) -> tuple[np.ndarray, np.ndarray]:
    """Exact (N, N_restricted) for ``trials`` independent trees.

    Vectorized across a chunk of trees at a time; tree t uses root key
    derive_key(seed, t), identical to ``sample_full_tree(params,
    derive_key(seed, t))``.
    """
    n, h = params.n, params.h
    if tree_size(n, h) > MAX_TREE_VERTICES:
        raise SizeExceededError(
            f"tree with n={n}, h={h} has {tree_size(n, h)} vertices "
            f"(limit {MAX_TREE_VERTICES})"
        )
    counts = np.empty(trials, dtype=np.int64)
    restricted = np.empty(trials, dtype=np.int64)
    chunk = max(1, int(4e6) // max(1, n**h))
    for lo in range(0, trials, chunk):
        hi = min(lo + chunk, trials)
        keys = derive_key_array(seed, np.arange(lo, hi))
        t = hi - lo
        inc = np.ones((t, 1), dtype=bool)
        ramp = np.ones((t, 1), dtype=bool)
        prev = np.full((t, 1), -1.0)
        parents = keys[:, None]
        for j in range(1, h + 1):
            children = child_keys_array(parents.reshape(-1), n).reshape(t, -1)
            labels = unit_array(children)
            up = labels > np.repeat(prev, n, axis=1)
            inc = np.repeat(inc, n, axis=1) & up
            ramp = (
                np.repeat(ramp, n, axis=1)
                & up
                & (labels >= ramp_threshold(j, h, eps))
            )
            parents = children
            prev = labels
        counts[lo:hi] = inc.sum(axis=1)
        restricted[lo:hi] = ramp.sum(axis=1)
    return counts, restricted


def estimate_exist_prob_bruteforce(
    params: ModelParams, trials: int, seed: int, z: float = 1.96
) -> TrialEstimate:
    """Fraction of fully enumerated trees containing an increasing path.

    This is the oracle the lazy sampler must match; it never prunes, it
    counts every path of every sampled tree.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    counts, _ = _batch_counts(params, trials, seed, eps=0.0)
    return TrialEstimate.from_counts(int((counts >= 1).sum()), trials, z)


def path_count_sample(
    params: ModelParams, trials: int, seed: int, eps: float = 0.0
) -> tuple[StreamingStats, StreamingStats]:
    """Streaming moments of (N, N_restricted) over independent trees."""
    counts, restricted = _batch_counts(params, trials, seed, eps)
    def _stats(values: np.ndarray) -> StreamingStats:
        count = len(values)
        mean = float(values.mean())
        m2 = float(((values - mean) ** 2).sum())
        return StreamingStats(count=count, mean=mean, m2=m2)
    return _stats(counts), _stats(restricted)


__all__ = [
    "MAX_RANKS",
    "MAX_TREE_VERTICES",
    "CountReport",
    "ForkSpectrum",
    "LabelledTree",
    "count_by_predicates",
    "count_pairs_with_fork",
    "count_report",
    "estimate_exist_prob_bruteforce",
    "exact_joint_fork_prob",
    "numeric_joint_ramp_prob",
    "path_count_sample",
    "sample_full_tree",
    "tree_size",
]

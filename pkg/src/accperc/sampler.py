"""Scalable lazy Monte Carlo: per-trial existence, capped counting and
banded level counts without materializing the tree.

Labels are drawn on demand from the hash stream keyed by vertex address
(accperc.streams), so trials are reproducible, embarrassingly parallel and
couple-able across branching factors.  Search is depth-first in child index
order with early exit on the first complete path; any child whose label
fails the increase test (or the ramp floor of its level, in restricted
modes) is pruned together with its whole subtree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from . import _kernels
from .model import ModelParams, ramp_threshold
from .streams import derive_key_array

Mode = Literal["exists", "count", "restricted_exists", "restricted_count"]

_EXISTS_MODES = ("exists", "restricted_exists")
_COUNT_MODES = ("count", "restricted_count")


@dataclass(frozen=True)
class TrialConfig:
    """Per-trial sampling configuration."""

    params: ModelParams
    cap: int = 10**6
    coupled_max_n: int | None = None
    mode: Mode = "exists"

    def __post_init__(self):
        if self.cap < 1:
            raise ValueError(f"cap must be >= 1, got {self.cap}")
        if self.coupled_max_n is not None and self.coupled_max_n < self.params.n:
            raise ValueError(
                f"coupled_max_n={self.coupled_max_n} below n={self.params.n}"
            )
        if self.mode not in _EXISTS_MODES + _COUNT_MODES:
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def restricted(self) -> bool:
        return self.mode.startswith("restricted")


@dataclass(frozen=True)
class LevelConfig:
    """Banded level-count configuration: ``levels`` consecutive intervals of
    width ``width_eps / levels`` partitioning [0, width_eps)."""

    levels: int
    width_eps: float

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if not 0.0 <= self.width_eps < 1.0:
            raise ValueError(f"width_eps must lie in [0, 1), got {self.width_eps}")


@dataclass(frozen=True)
class LevelCounts:
    """counts[j-1] = number of surviving banded subpaths at level j."""

    counts: tuple[int, ...]


def _floors(params: ModelParams, restricted: bool) -> np.ndarray:
    """Per-level label floors (index 0 unused); zeros when unrestricted."""
    floors = np.zeros(params.h + 1)
    if restricted:
        for j in range(1, params.h + 1):
            floors[j] = ramp_threshold(j, params.h, params.eps)
    return floors


def simulate_exists(cfg: TrialConfig, seed: int) -> bool:
    """True iff the lazily generated tree contains an admissible
    root-to-leaf path.  Deterministic given the seed."""
    if cfg.mode not in _EXISTS_MODES:
        raise ValueError(f"simulate_exists needs an exists mode, got {cfg.mode!r}")
    root = seed & ((1 << 64) - 1)
    floors = _floors(cfg.params, cfg.restricted)
    return bool(_kernels.exists_dfs(np.uint64(root), cfg.params.n, cfg.params.h, floors))


def simulate_count_capped(cfg: TrialConfig, seed: int) -> int:
    """Exact number of admissible paths, saturating at cfg.cap.

    A return value equal to the cap means the traversal was halted; callers
    treating the result as an exact count must censor those trials.
    """
    if cfg.mode not in _COUNT_MODES:
        raise ValueError(f"simulate_count_capped needs a count mode, got {cfg.mode!r}")
    root = seed & ((1 << 64) - 1)
    floors = _floors(cfg.params, cfg.restricted)
    return int(
        _kernels.count_dfs(
            np.uint64(root), cfg.params.n, cfg.params.h, floors, cfg.cap
        )
    )


def simulate_exists_coupled(
    params: ModelParams, n_max: int, seed: int
) -> list[bool]:
    """Existence indicators for branching factors n = 1..n_max on one
    coupled label stream.

    Child labels are keyed by (address, child index) only, so each tree is
    a subtree of the next and the output is non-decreasing in n by
    construction, trial by trial.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    root = np.array([seed & ((1 << 64) - 1)], dtype=np.uint64)
    n_values = np.arange(1, n_max + 1, dtype=np.int64)
    floors = np.zeros(params.h + 1)
    out = np.zeros((1, n_max), dtype=np.uint8)
    _kernels.coupled_batch(root, n_values, params.h, floors, out)
    return [bool(v) for v in out[0]]


def simulate_level_counts(
    params: ModelParams, lc: LevelConfig, seed: int
) -> LevelCounts:
    """Exact banded subpath counts per level, by breadth expansion of the
    previous level's survivors only."""
    if lc.levels > params.h:
        raise ValueError(f"levels={lc.levels} exceeds height {params.h}")
    root = seed & ((1 << 64) - 1)
    out = np.zeros(lc.levels, dtype=np.int64)
    _kernels.level_counts(np.uint64(root), params.n, lc.levels, lc.width_eps, out)
    return LevelCounts(counts=tuple(int(c) for c in out))


# Batch drivers: one kernel call per chunk of trials.  Trial t of a batch
# uses root key derive_key(master_seed, t); results are independent of how
# callers split trials into chunks.


def exists_batch(cfg: TrialConfig, trials: int, master_seed: int,
                 trial_offset: int = 0) -> np.ndarray:
    if cfg.mode not in _EXISTS_MODES:
        raise ValueError(f"exists_batch needs an exists mode, got {cfg.mode!r}")
    keys = derive_key_array(master_seed, np.arange(trial_offset, trial_offset + trials))
    out = np.zeros(trials, dtype=np.uint8)
    _kernels.exists_batch(keys, cfg.params.n, cfg.params.h,
                          _floors(cfg.params, cfg.restricted), out)
    return out.astype(bool)


def count_batch(cfg: TrialConfig, trials: int, master_seed: int,
                trial_offset: int = 0) -> np.ndarray:
    if cfg.mode not in _COUNT_MODES:
        raise ValueError(f"count_batch needs a count mode, got {cfg.mode!r}")
    keys = derive_key_array(master_seed, np.arange(trial_offset, trial_offset + trials))
    out = np.zeros(trials, dtype=np.int64)
    _kernels.count_batch(keys, cfg.params.n, cfg.params.h,
                         _floors(cfg.params, cfg.restricted), cfg.cap, out)
    return out


def coupled_exists_batch(h: int, n_values: Iterable[int], trials: int,
                         master_seed: int, trial_offset: int = 0) -> np.ndarray:
    """Per-trial existence indicators over an ascending n grid, coupled.

    Returns a (trials, len(n_values)) uint8 array; every row is
    non-decreasing.  n_values must be sorted ascending.
    """
    ns = np.asarray(list(n_values), dtype=np.int64)
    if len(ns) == 0 or np.any(np.diff(ns) < 0) or ns[0] < 1:
        raise ValueError("n_values must be a non-empty ascending sequence of ints >= 1")
    keys = derive_key_array(master_seed, np.arange(trial_offset, trial_offset + trials))
    floors = np.zeros(h + 1)
    out = np.zeros((trials, len(ns)), dtype=np.uint8)
    _kernels.coupled_batch(keys, ns, h, floors, out)
    return out


def level_counts_batch(params: ModelParams, lc: LevelConfig, trials: int,
                       master_seed: int, trial_offset: int = 0) -> np.ndarray:
    """(trials, levels) exact banded counts."""
    if lc.levels > params.h:
        raise ValueError(f"levels={lc.levels} exceeds height {params.h}")
    keys = derive_key_array(master_seed, np.arange(trial_offset, trial_offset + trials))
    out = np.zeros((trials, lc.levels), dtype=np.int64)
    _kernels.level_counts_batch(keys, params.n, lc.levels, lc.width_eps, out)
    return out

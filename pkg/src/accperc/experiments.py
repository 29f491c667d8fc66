"""Reproducible experiment orchestration: grid sweeps, coupled sweeps,
near-critical regime sweeps, and result persistence.

Determinism contract: every trial's seed is derived from (master seed,
point index, trial index) through the hash chain, trials are aggregated by
integer sums, and statistical outputs are rounded to 12 significant digits
before serialization, so identical configurations produce byte-identical
output files regardless of the worker count or scheduling.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import moments, sampler
from .model import ModelParams
from .sampler import TrialConfig
from .stats import wilson_interval
from .streams import derive_key

_CHUNK = 2048

CSV_HEADER = (
    "alpha,n,h,eps,trials,successes,p_hat,ci_lo,ci_hi,"
    "log_expected_paths,markov_bound,seed"
)

_FIELDS = CSV_HEADER.split(",")


@dataclass(frozen=True)
class SweepConfig:
    """A grid of (alpha, h) points, each estimated with independent trials."""

    alpha_grid: tuple[float, ...]
    h_grid: tuple[int, ...]
    eps: float = 0.0
    trials_per_point: int = 10_000
    master_seed: int = 0
    mode: str = "exists"
    beta_expr: str | None = None
    z: float = 1.96
    workers: int = 1

    def __post_init__(self):
        if not self.alpha_grid and self.mode != "regime":
            raise ValueError("alpha_grid must not be empty")
        if not self.h_grid:
            raise ValueError("h_grid must not be empty")
        if self.trials_per_point < 1:
            raise ValueError(f"trials_per_point must be >= 1, got {self.trials_per_point}")
        if not 0.0 <= self.eps < 1.0:
            raise ValueError(f"eps must lie in [0, 1), got {self.eps}")
        if self.mode not in ("exists", "count", "levels", "regime"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class SweepRow:
    """One grid point.  An infeasible point keeps its coordinates but has
    trials = 0 and NaN statistics (flagged, not dropped)."""

    alpha: float
    n: int
    h: int
    eps: float
    trials: int
    successes: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    log_expected_paths: float
    markov_bound: float
    seed: int

    @property
    def feasible(self) -> bool:
        return self.trials > 0


def _success_count(cfg: TrialConfig, trials: int, point_seed: int, workers: int) -> int:
    """Total successes over `trials` lazy-sampler trials.

    Work is split into fixed-size chunks whose seeds depend only on the
    trial index, so the result is the same for any worker count.
    """
    chunks = [(lo, min(lo + _CHUNK, trials)) for lo in range(0, trials, _CHUNK)]

    def run(span: tuple[int, int]) -> int:
        lo, hi = span
        if cfg.mode in ("count", "restricted_count"):
            counts = sampler.count_batch(cfg, hi - lo, point_seed, trial_offset=lo)
            return int((counts >= 1).sum())
        return int(sampler.exists_batch(cfg, hi - lo, point_seed, trial_offset=lo).sum())

    if workers <= 1 or len(chunks) == 1:
        return sum(run(span) for span in chunks)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(run, chunks))


def _row(alpha: float, n: int, h: int, eps: float, trials: int,
         successes: int, z: float, seed: int) -> SweepRow:
    ep = moments.expected_paths(n, h)
    lo, hi = wilson_interval(successes, trials, z)
    return SweepRow(
        alpha=alpha, n=n, h=h, eps=eps, trials=trials, successes=successes,
        p_hat=successes / trials, ci_lo=lo, ci_hi=hi,
        log_expected_paths=ep.log,
        markov_bound=min(1.0, math.exp(ep.log)),
        seed=seed,
    )


def _infeasible_row(alpha: float, n: int, h: int, eps: float, seed: int) -> SweepRow:
    nan = float("nan")
    return SweepRow(
        alpha=alpha, n=max(n, 0), h=h, eps=eps, trials=0, successes=0,
        p_hat=nan, ci_lo=nan, ci_hi=nan, log_expected_paths=nan,
        markov_bound=nan, seed=seed,
    )


def run_sweep(cfg: SweepConfig) -> list[SweepRow]:
    """Estimate the existence probability at every (h, alpha) grid point.

    Positive eps switches the event to ramp-restricted existence; the
    Markov column always bounds the unrestricted probability and therefore
    the restricted one too.  Infeasible points (n = floor(alpha*h) < 1) are
    flagged rows.
    """
    if cfg.mode not in ("exists", "count"):
        raise ValueError(f"run_sweep handles exists/count modes, got {cfg.mode!r}")
    rows = []
    point_index = 0
    for h in cfg.h_grid:
        for alpha in cfg.alpha_grid:
            point_seed = derive_key(cfg.master_seed, point_index)
            point_index += 1
            n = math.floor(alpha * h)
            if n < 1:
                rows.append(_infeasible_row(alpha, n, h, cfg.eps, point_seed))
                continue
            params = ModelParams(n=n, h=h, eps=cfg.eps)
            if cfg.mode == "count":
                mode = "restricted_count" if cfg.eps > 0 else "count"
            else:
                mode = "restricted_exists" if cfg.eps > 0 else "exists"
            tc = TrialConfig(params=params, mode=mode)
            successes = _success_count(tc, cfg.trials_per_point, point_seed, cfg.workers)
            rows.append(_row(alpha, n, h, cfg.eps, cfg.trials_per_point,
                             successes, cfg.z, point_seed))
    return rows


@dataclass(frozen=True)
class CoupledSweep:
    """Result of a coupled sweep at fixed height: one row per alpha plus the
    raw per-trial indicator matrix (trials x alphas, non-decreasing rows)."""

    rows: list[SweepRow]
    indicators: np.ndarray
    n_values: tuple[int, ...]
    monotone_violations: int


def run_coupled_sweep(
    h: int,
    alpha_grid: Sequence[float],
    trials: int,
    master_seed: int,
    z: float = 1.96,
    workers: int = 1,
) -> CoupledSweep:
    """Existence estimates across an alpha grid on one coupled label stream.

    All alphas share every trial's labels, so each trial's indicator vector
    is non-decreasing in n exactly (not statistically); the marginal
    estimate at each alpha is distributed as in an uncoupled run.
    """
    alphas = sorted(alpha_grid)
    if not alphas:
        raise ValueError("alpha_grid must not be empty")
    n_values = [math.floor(a * h) for a in alphas]
    if n_values[0] < 1:
        raise ValueError(f"alpha={alphas[0]} gives n < 1 at h={h}")
    unique_ns = sorted(set(n_values))

    chunks = [(lo, min(lo + _CHUNK, trials)) for lo in range(0, trials, _CHUNK)]

    def run(span: tuple[int, int]) -> np.ndarray:
        lo, hi = span
        return sampler.coupled_exists_batch(h, unique_ns, hi - lo, master_seed,
                                            trial_offset=lo)

    if workers <= 1 or len(chunks) == 1:
        parts = [run(span) for span in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    unique_ind = np.concatenate(parts, axis=0)
    violations = int((np.diff(unique_ind.astype(np.int8), axis=1) < 0).sum())

    col_of = {n: i for i, n in enumerate(unique_ns)}
    indicators = unique_ind[:, [col_of[n] for n in n_values]]
    rows = []
    for j, (alpha, n) in enumerate(zip(alphas, n_values)):
        successes = int(unique_ind[:, col_of[n]].sum())
        rows.append(_row(alpha, n, h, 0.0, trials, successes, z, master_seed))
    return CoupledSweep(rows=rows, indicators=indicators,
                        n_values=tuple(n_values), monotone_violations=violations)


@dataclass(frozen=True)
class RegimeSweep:
    rows: list[SweepRow]
    classification: moments.RegimeClassification


def default_regime_eps(h: int, beta: float) -> float:
    """Near-critical ramp floor: beta / sqrt(log h), shrinking relative to
    beta while h*eps/log h still diverges whenever h*beta/(log h)^(3/2)
    does.  Clamped into [0, 1)."""
    if h < 2:
        return 0.0
    return min(max(beta / math.sqrt(math.log(h)), 0.0), 0.999999)


def run_regime_sweep(
    h_grid: Sequence[int],
    beta_fn: Callable[[int], float],
    trials: int,
    master_seed: int,
    eps_fn: Callable[[int, float], float] | None = None,
    z: float = 1.96,
    workers: int = 1,
) -> RegimeSweep:
    """Existence estimates along h with n = floor(((1 + beta_h)/e) h),
    together with the divergence diagnostics of the regime classifier."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    eps_fn = eps_fn or default_regime_eps
    rows = []
    for point_index, h in enumerate(h_grid):
        beta = beta_fn(h)
        alpha = (1.0 + beta) / math.e
        n = math.floor(alpha * h)
        point_seed = derive_key(master_seed, point_index)
        if n < 1:
            raise ValueError(f"beta_h at h={h} gives n < 1")
        eps = eps_fn(h, beta)
        params = ModelParams(n=n, h=h, eps=eps)
        tc = TrialConfig(params=params, mode="exists")
        successes = _success_count(tc, trials, point_seed, workers)
        rows.append(_row(alpha, n, h, eps, trials, successes, z, point_seed))
    classification = moments.classify_regime(list(h_grid), beta_fn)
    return RegimeSweep(rows=rows, classification=classification)


@dataclass(frozen=True)
class LevelExperiment:
    """Banded level-count experiment summary."""

    n: int
    h: int
    levels: int
    width_eps: float
    trials: int
    means: tuple[float, ...]
    sems: tuple[float, ...]
    expected: tuple[float, ...]
    shortfall_threshold: float
    shortfall_rate: float
    shortfall_bound: float
    bound_clamped: bool


def run_level_experiment(
    params: ModelParams,
    lc: sampler.LevelConfig,
    trials: int,
    master_seed: int,
    workers: int = 1,
) -> LevelExperiment:
    """Estimate mean banded counts per level against the exact means
    n^j (eps/J)^j, and the empirical shortfall frequency at the final level
    against its closed-form bound."""
    chunks = [(lo, min(lo + _CHUNK, trials)) for lo in range(0, trials, _CHUNK)]

    def run(span: tuple[int, int]) -> np.ndarray:
        lo, hi = span
        return sampler.level_counts_batch(params, lc, hi - lo, master_seed,
                                          trial_offset=lo)

    if workers <= 1 or len(chunks) == 1:
        parts = [run(span) for span in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    counts = np.concatenate(parts, axis=0)
    means = counts.mean(axis=0)
    sems = counts.std(axis=0, ddof=1) / math.sqrt(trials)
    expected = [
        (params.n * lc.width_eps / lc.levels) ** j for j in range(1, lc.levels + 1)
    ]
    threshold = (params.n * lc.width_eps / 8.0) ** lc.levels
    rate = float((counts[:, -1] <= threshold).mean())
    raw = moments.level_shortfall_bound(params.n, lc.width_eps, clamp=False) \
        if lc.width_eps > 0 else float("inf")
    return LevelExperiment(
        n=params.n, h=params.h, levels=lc.levels, width_eps=lc.width_eps,
        trials=trials,
        means=tuple(float(m) for m in means),
        sems=tuple(float(s) for s in sems),
        expected=tuple(expected),
        shortfall_threshold=threshold,
        shortfall_rate=rate,
        shortfall_bound=min(1.0, raw),
        bound_clamped=raw >= 1.0,
    )


# Serialization.  Floats are written with 17 significant digits so parsing
# recovers the exact double; p_hat/ci fields are rounded to 12 significant
# digits first to absorb any merge-order noise in future statistics.

_ROUNDED_FIELDS = {"p_hat", "ci_lo", "ci_hi"}


def _round12(x: float) -> float:
    if math.isnan(x):
        return x
    return float(f"{x:.12g}")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _row_values(row: SweepRow) -> dict:
    values = {}
    for name in _FIELDS:
        v = getattr(row, name)
        if name in _ROUNDED_FIELDS:
            v = _round12(v)
        values[name] = v
    return values


def write_results(rows: Sequence[SweepRow], format: str, path: str | Path) -> None:
    """Write rows as CSV (fixed header) or JSON (array of flat objects with
    the same field names).  NaNs of infeasible rows serialize as 'nan' in
    CSV and null in JSON."""
    path = Path(path)
    if format == "csv":
        lines = [CSV_HEADER]
        for row in rows:
            vals = _row_values(row)
            cells = []
            for name in _FIELDS:
                v = vals[name]
                cells.append(str(v) if isinstance(v, int) else _fmt(v))
            lines.append(",".join(cells))
        path.write_text("\n".join(lines) + "\n")
    elif format == "json":
        items = []
        for row in rows:
            vals = _row_values(row)
            fields = []
            for name in _FIELDS:
                v = vals[name]
                if isinstance(v, int):
                    text = str(v)
                elif math.isnan(v):
                    text = "null"
                else:
                    text = _fmt(v)
                fields.append(f'"{name}": {text}')
            items.append("{" + ", ".join(fields) + "}")
        path.write_text("[\n" + ",\n".join(items) + "\n]\n")
    else:
        raise ValueError(f"unknown format {format!r}")


def read_results(path: str | Path, format: str | None = None) -> list[SweepRow]:
    """Parse a results file written by ``write_results``."""
    path = Path(path)
    if format is None:
        format = "json" if path.suffix == ".json" else "csv"
    rows = []
    if format == "csv":
        lines = path.read_text().splitlines()
        if not lines or lines[0] != CSV_HEADER:
            raise ValueError(f"unexpected CSV header in {path}")
        for line in lines[1:]:
            cells = line.split(",")
            rows.append(_row_from_mapping(dict(zip(_FIELDS, cells))))
    elif format == "json":
        for obj in json.loads(path.read_text()):
            rows.append(_row_from_mapping(obj))
    else:
        raise ValueError(f"unknown format {format!r}")
    return rows


def _row_from_mapping(m: dict) -> SweepRow:
    def fl(name: str) -> float:
        v = m[name]
        if v is None:
            return float("nan")
        return float(v)

    return SweepRow(
        alpha=fl("alpha"), n=int(m["n"]), h=int(m["h"]), eps=fl("eps"),
        trials=int(m["trials"]), successes=int(m["successes"]),
        p_hat=fl("p_hat"), ci_lo=fl("ci_lo"), ci_hi=fl("ci_hi"),
        log_expected_paths=fl("log_expected_paths"),
        markov_bound=fl("markov_bound"), seed=int(m["seed"]),
    )

"""Mergeable streaming statistics and binomial interval estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class StreamingStats:
    """Single-pass mean/variance accumulator (Welford form).

    Immutable: ``update`` and ``merge`` return new values, and ``merge`` is
    the associative/commutative contract workers use to combine partial
    results.  ``saturated_count`` tracks trials that hit a counting cap and
    were excluded from the moments (caps bias means downward, so saturated
    observations are censored rather than mixed in).
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    saturated_count: int = 0

    def update(self, x: float) -> "StreamingStats":
        count = self.count + 1
        delta = x - self.mean
        mean = self.mean + delta / count
        m2 = self.m2 + delta * (x - mean)
        return StreamingStats(count, mean, m2, self.saturated_count)

    def update_saturated(self) -> "StreamingStats":
        return StreamingStats(
            self.count, self.mean, self.m2, self.saturated_count + 1
        )

    def merge(self, other: "StreamingStats") -> "StreamingStats":
        if self.count == 0:
            return StreamingStats(
                other.count,
                other.mean,
                other.m2,
                self.saturated_count + other.saturated_count,
            )
        if other.count == 0:
            return StreamingStats(
                self.count,
                self.mean,
                self.m2,
                self.saturated_count + other.saturated_count,
            )
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
        return StreamingStats(
            count, mean, m2, self.saturated_count + other.saturated_count
        )

    @classmethod
    def from_values(cls, values) -> "StreamingStats":
        s = cls()
        for x in values:
            s = s.update(x)
        return s

    @property
    def variance(self) -> float:
        if self.count < 2:
            return float("nan")
        return self.m2 / (self.count - 1)

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def sem(self) -> float:
        """Standard error of the mean."""
        return self.std / math.sqrt(self.count)


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion, clamped to [0, 1].

    Preferred over the Wald interval because sweep tails sit near p = 0 or
    p = 1 where Wald collapses to zero width.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes {successes} outside [0, {trials}]")
    if z <= 0:
        raise ValueError(f"z must be positive, got {z}")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class TrialEstimate:
    """Binomial proportion estimate with its Wilson interval."""

    successes: int
    trials: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    z: float = 1.96

    @classmethod
    def from_counts(cls, successes: int, trials: int, z: float = 1.96) -> "TrialEstimate":
        lo, hi = wilson_interval(successes, trials, z)
        return cls(successes, trials, successes / trials, lo, hi, z)

    @property
    def std_err(self) -> float:
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.trials)

    def overlaps(self, other: "TrialEstimate") -> bool:
        return self.ci_lo <= other.ci_hi and other.ci_lo <= self.ci_hi

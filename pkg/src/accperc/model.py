"""Instance parameters, label vectors and region predicates.

The model: a regular n-ary tree of height h whose non-root vertices carry
i.i.d. uniform [0,1) labels.  A root-to-leaf path is accessible when its
labels strictly increase.  Three regions of label space recur everywhere:

* increasing:  x_1 < x_2 < ... < x_h
* floor:       x_j >= eps for every j
* ramp:        x_j >= eps + (1 - eps) * (j - 1) / h for every j

All region boundaries are inclusive.  Labels are 64-bit floats, so ties have
negligible but nonzero probability; a tie counts as "not increasing".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

#: Labels along one root-to-leaf path, ordered by depth.
LabelVector = Sequence[float]

#: Child index chosen at each level; addresses a path (or path prefix).
PathAddress = tuple[int, ...]


@dataclass(frozen=True)
class ModelParams:
    """One instance: branching factor n, height h, optional ratio alpha.

    When ``alpha`` is supplied, ``n`` is derived as floor(alpha * h) and must
    not be passed explicitly.  ``eps`` is the region floor parameter used by
    restricted counts.
    """

    n: int = 0
    h: int = 1
    alpha: float | None = None
    eps: float = 0.0

    def __post_init__(self):
        if self.alpha is not None:
            if self.alpha <= 0:
                raise ValueError(f"alpha must be positive, got {self.alpha}")
            derived = math.floor(self.alpha * self.h)
            if self.n not in (0, derived):
                raise ValueError(
                    f"n={self.n} contradicts floor(alpha*h)={derived}; "
                    "pass one of n, alpha"
                )
            object.__setattr__(self, "n", derived)
        if self.n < 1:
            raise ValueError(f"branching factor must be >= 1, got n={self.n}")
        if self.h < 1:
            raise ValueError(f"height must be >= 1, got h={self.h}")
        if not 0.0 <= self.eps < 1.0:
            raise ValueError(f"eps must lie in [0, 1), got {self.eps}")

    @property
    def alpha_effective(self) -> float:
        """The exact ratio n / h of this instance."""
        return self.n / self.h


@dataclass(frozen=True)
class RegimeParams:
    """Near-critical instance with n = floor(((1 + beta) / e) * h)."""

    h: int
    beta: float
    eps_h: float = 0.0

    def __post_init__(self):
        if self.h < 1:
            raise ValueError(f"height must be >= 1, got h={self.h}")
        if self.n < 1:
            raise ValueError(
                f"beta={self.beta} gives n={self.n} < 1 at h={self.h}"
            )
        if not 0.0 <= self.eps_h < 1.0:
            raise ValueError(f"eps_h must lie in [0, 1), got {self.eps_h}")

    @property
    def n(self) -> int:
        return math.floor((1.0 + self.beta) / math.e * self.h)

    def to_params(self) -> ModelParams:
        return ModelParams(n=self.n, h=self.h, eps=self.eps_h)


def ramp_threshold(level: int, h: int, eps: float) -> float:
    """Minimum admissible label at the given level (1-based) of the ramp."""
    return eps + (1.0 - eps) * (level - 1) / h


def in_increasing(x: LabelVector) -> bool:
    """True iff the entries strictly increase (vacuously true for length 1)."""
    return all(a < b for a, b in zip(x, x[1:]))


def in_floor_region(x: LabelVector, eps: float) -> bool:
    """True iff every entry is at least eps (boundary inclusive)."""
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    return all(v >= eps for v in x)


def in_ramp_region(x: LabelVector, eps: float, h: int) -> bool:
    """True iff entry j clears the ramp eps + (1-eps)(j-1)/h for all j."""
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    if len(x) != h:
        raise ValueError(f"expected {h} entries, got {len(x)}")
    return all(v >= ramp_threshold(j, h, eps) for j, v in enumerate(x, start=1))


def fork_depth(u: PathAddress, v: PathAddress) -> int:
    """Number of leading child indices shared by two equal-length addresses.

    0 when the paths split at the first level, len(u) when identical.
    """
    if len(u) != len(v):
        raise ValueError(f"address lengths differ: {len(u)} vs {len(v)}")
    k = 0
    for a, b in zip(u, v):
        if a != b:
            break
        k += 1
    return k

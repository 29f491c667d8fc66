"""Closed-form moments, tail bounds and regime classification.

Everything a sweep needs without simulating: the expected number of
increasing paths n^h/h!, the lower bound on the ramp-restricted mean, the
per-fork and total second-moment upper bounds, the Paley-Zygmund existence
bound they combine into, Chernoff/level-shortfall bounds for the banded
subpath construction, and the near-critical regime classifier.

Large parameters are evaluated in log space through log-gamma; small
instances get exact rationals.  Upper bounds always use the fully explicit
finite sums rather than any unquantified constant, so every inequality
reported here is checkable against the exact oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import QuadratureError

#: Universal double-sided Stirling constants: 2 < n! / (sqrt(n) (n/e)^n) < 3.
STIRLING_LO = 2.0
STIRLING_HI = 3.0

_EXACT_H_MAX = 20
_EXACT_N_MAX = 100


class ExpectedPaths(NamedTuple):
    """log of n^h/h!, with the exact rational when small enough to carry."""

    log: float
    exact: Fraction | None


def expected_paths(n: int, h: int) -> ExpectedPaths:
    """Expected number of increasing root-to-leaf paths, n^h / h!."""
    if n < 1 or h < 1:
        raise ValueError(f"need n, h >= 1, got n={n}, h={h}")
    log_value = h * math.log(n) - float(gammaln(h + 1))
    exact = None
    if h <= _EXACT_H_MAX and n <= _EXACT_N_MAX:
        exact = Fraction(n**h, math.factorial(h))
    return ExpectedPaths(log=log_value, exact=exact)


def stirling_ratio(n: int) -> float:
    """n! / (sqrt(n) (n/e)^n), evaluated in log space.

    Strictly between 2 and 3 for every n >= 1, decreasing to sqrt(2*pi).
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return math.exp(float(gammaln(n + 1)) - 0.5 * math.log(n) - n * math.log(n) + n)


def ordered_floors_prob(j: int) -> Fraction:
    """Probability that j i.i.d. uniforms are nondecreasing with the i-th
    at least i/(j+1): exactly 1/(j+1)!."""
    if j < 1:
        raise ValueError(f"need j >= 1, got {j}")
    return Fraction(1, math.factorial(j + 1))


def _nested_poly_integral(
    lowers: Sequence[float], inner: Callable[[np.ndarray], np.ndarray], order: int
) -> float:
    """Nested integral over v_1..v_d with v_m in [lowers[m-1], v_{m+1}] and
    outermost upper limit 1, by tensorized Gauss-Legendre of given order."""
    nodes, weights = np.polynomial.legendre.leggauss(order)

    def rec(level: int, upper: np.ndarray) -> np.ndarray:
        a = lowers[level]
        half = 0.5 * (upper - a)
        v = (0.5 * (upper + a))[..., None] + half[..., None] * nodes
        vals = inner(v) if level == 0 else rec(level - 1, v)
        return (vals * weights).sum(axis=-1) * half

    return float(rec(len(lowers) - 1, np.asarray(1.0)))


def _adaptive_nested(lowers, inner, tol):
    """Escalate the quadrature order until two successive evaluations agree."""
    prev = None
    for order in (8, 12, 16):
        val = _nested_poly_integral(lowers, inner, order)
        if prev is not None and abs(val - prev) <= 0.1 * tol:
            return val
        prev = val
    raise QuadratureError(
        f"nested quadrature did not stabilize within {tol} (last delta "
        f"{abs(val - prev)})"
    )


def ordered_floors_quadrature(j: int, tol: float = 1e-9) -> float:
    """Independent verification of ``ordered_floors_prob`` by quadrature.

    Evaluates the raw j-dimensional probability integral p and the family of
    partially integrated forms

        I_i = int ... int ( v_i^(i-1)/(i-1)! - v_i^(i-2)/((j+1)(i-2)!) )

    for i = 2..j over the staircase limits, and returns the maximum absolute
    deviation from 1/(j+1)!.  Raises QuadratureError on non-convergence.
    """
    if not 2 <= j <= 6:
        raise ValueError(f"need 2 <= j <= 6, got {j}")
    target = float(ordered_floors_prob(j))
    deviations = []

    lowers = [m / (j + 1) for m in range(1, j + 1)]
    p = _adaptive_nested(lowers, lambda v: np.ones_like(v), tol)
    deviations.append(abs(p - target))

    for i in range(2, j + 1):
        c1 = math.factorial(i - 1)
        c2 = (j + 1) * math.factorial(i - 2)

        def integrand(v, c1=c1, c2=c2, i=i):
            return v ** (i - 1) / c1 - v ** (i - 2) / c2

        lowers_i = [m / (j + 1) for m in range(i, j + 1)]
        val = _adaptive_nested(lowers_i, integrand, tol)
        deviations.append(abs(val - target))

    worst = max(deviations)
    if worst >= tol:
        raise QuadratureError(f"max deviation {worst} exceeds tolerance {tol}")
    return worst


def restricted_mean_lower(alpha: float, eps: float, h: int) -> float:
    """log of the guaranteed lower bound (alpha(1-eps)e)^h / (3 h^(3/2)) on
    the expected number of increasing ramp-restricted paths."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    if h < 1:
        raise ValueError(f"need h >= 1, got {h}")
    return h * math.log(alpha * (1.0 - eps) * math.e) - math.log(3.0) - 1.5 * math.log(h)


def fork_moment_upper(alpha: float, eps: float, h: int, k: int) -> float:
    """log of the upper bound on the k-fork contribution to the second
    moment of the restricted path count, 1 <= k <= h-1.

    k = 1: (e/4) (alpha(1-eps)e)^(2h-1);
    k >= 2: (e/8) (alpha(1-eps)e)^(2h-k) h / ((k-1)^(1/2) (h-k+1)).
    """
    if not 1 <= k <= h - 1:
        raise ValueError(f"fork depth {k} outside [1, {h - 1}]")
    base = math.log(alpha * (1.0 - eps) * math.e)
    if k == 1:
        return math.log(math.e / 4.0) + (2 * h - 1) * base
    return (
        math.log(math.e / 8.0)
        + (2 * h - k) * base
        + math.log(h)
        - 0.5 * math.log(k - 1)
        - math.log(h - k + 1)
    )


def second_moment_upper(
    alpha: float, eps: float, h: int, log_mean: float | None = None
) -> float:
    """log of the explicit upper bound on the second moment of the
    restricted path count: E + E^2 + the k=1 fork term + the finite sum of
    fork terms for k = 2..h-1.

    Requires alpha(1-eps)e > 1.  ``log_mean`` is log of (an upper bound on)
    the restricted mean; defaults to log of n^h/h! with n = alpha*h, which
    dominates it.  The unquantified-constant form c*(alpha(1-eps)e)^(2h) is
    never used.
    """
    base = alpha * (1.0 - eps) * math.e
    if base <= 1.0:
        raise ValueError(f"need alpha(1-eps)e > 1, got {base}")
    if log_mean is None:
        log_mean = h * math.log(alpha * h) - float(gammaln(h + 1))
    terms = [log_mean, 2.0 * log_mean, fork_moment_upper(alpha, eps, h, 1)]
    terms.extend(fork_moment_upper(alpha, eps, h, k) for k in range(2, h))
    return float(logsumexp(terms))


def paley_zygmund_lower(mean: float, second_moment: float) -> float:
    """Existence lower bound mean^2 / (4 * second_moment), clamped to [0,1].

    Valid for any non-negative variable; this is the probability of
    exceeding half the mean."""
    if mean <= 0 or second_moment < mean * mean:
        raise ValueError(
            f"need second_moment >= mean^2 > 0, got mean={mean}, "
            f"second={second_moment}"
        )
    return min(1.0, mean * mean / (4.0 * second_moment))


def paley_zygmund_lower_log(log_mean: float, log_second_moment: float) -> float:
    """Same bound with log-space inputs, for parameters too large to
    represent linearly."""
    if log_second_moment < 2.0 * log_mean:
        raise ValueError("need log_second_moment >= 2*log_mean")
    return min(1.0, math.exp(2.0 * log_mean - math.log(4.0) - log_second_moment))


def chernoff_bound(mean: float) -> float:
    """exp(-mean/8): upper bound on the probability that a sum of
    independent Bernoulli variables falls to half its mean or below."""
    if mean < 0:
        raise ValueError(f"mean must be >= 0, got {mean}")
    return math.exp(-mean / 8.0)


def level_shortfall_bound(n: int, eps: float, clamp: bool = True) -> float:
    """4 exp(-n eps^4 / 16384): failure bound for the four-level banded
    subpath construction (probability that fewer than (n eps/8)^4 banded
    subpaths survive level 4).  Clamped to 1 by default since values above
    1 are vacuous as probabilities."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    raw = 4.0 * math.exp(-n * eps**4 / 16384.0)
    return min(1.0, raw) if clamp else raw


def fork_sum_atanh_bound(h: int) -> tuple[float, float]:
    """The exact sum over k = 2..h-1 of 1/((k-1)^(1/2) (h-k+1)) and its
    closed-form majorant (2/sqrt(h)) atanh(sqrt((h-1)/h)); sum < bound."""
    if h < 3:
        raise ValueError(f"need h >= 3, got {h}")
    k = np.arange(2, h)
    total = float((1.0 / (np.sqrt(k - 1.0) * (h - k + 1.0))).sum())
    bound = 2.0 / math.sqrt(h) * math.atanh(math.sqrt((h - 1.0) / h))
    return total, bound


@dataclass(frozen=True)
class RegimeDiagnostics:
    """Per-h values of the two divergence diagnostics."""

    h: int
    to_zero: float  # log h - 2 h beta_h
    to_one: float   # h beta_h / log h


@dataclass(frozen=True)
class RegimeClassification:
    verdict: str  # tends_to_zero | tends_to_one | indeterminate
    diagnostics: tuple[RegimeDiagnostics, ...]
    note: str = (
        "heuristic: divergence detected as the diagnostic exceeding the "
        "threshold while strictly increasing over the last quarter of the grid"
    )


def _diverging(values: Sequence[float], threshold: float) -> bool:
    if values[-1] <= threshold:
        return False
    tail = values[-(max(2, len(values) // 4)):]
    return all(b > a for a, b in zip(tail, tail[1:]))


def classify_regime(
    h_grid: Sequence[int],
    beta_fn: Callable[[int], float],
    threshold: float = 8.0,
) -> RegimeClassification:
    """Classify the limiting existence probability in the near-critical
    regime n = ((1 + beta_h)/e) h.

    The probability tends to 0 when log h - 2 h beta_h diverges and to 1
    when h beta_h / log h diverges; when neither diagnostic is seen to
    diverge along the grid the verdict is "indeterminate" (never guessed).
    """
    if len(h_grid) < 2:
        raise ValueError("h_grid needs at least two points")
    diags = []
    for h in h_grid:
        if h < 2:
            raise ValueError(f"h_grid entries must be >= 2, got {h}")
        beta = beta_fn(h)
        diags.append(
            RegimeDiagnostics(
                h=h,
                to_zero=math.log(h) - 2.0 * h * beta,
                to_one=h * beta / math.log(h),
            )
        )
    to_zero = [d.to_zero for d in diags]
    to_one = [d.to_one for d in diags]
    if _diverging(to_zero, threshold):
        verdict = "tends_to_zero"
    elif _diverging(to_one, threshold):
        verdict = "tends_to_one"
    else:
        verdict = "indeterminate"
    return RegimeClassification(verdict=verdict, diagnostics=tuple(diags))


@dataclass(frozen=True)
class MomentReport:
    """Every closed-form quantity for one parameter point.

    log-space fields hold natural logs.  ``log_growth_rate`` is the supremum
    of exponents d for which the restricted path count eventually exceeds
    exp(d*h) with the Paley-Zygmund probability; it and the second-moment /
    Paley-Zygmund fields are None outside the supercritical window
    alpha(1-eps)e > 1.  Bounds are evaluated at the effective ratio n/h so
    that every reported inequality is a true statement about the integer
    instance (n, h).
    """

    alpha: float
    n: int
    h: int
    eps: float
    alpha_effective: float
    log_expected_paths: float
    expected_paths_exact: Fraction | None
    stirling_lo: float
    stirling_hi: float
    log_mean_bracket: tuple[float, float]
    log_restricted_mean_lower: float
    log_second_moment_upper: float | None
    pz_lower: float | None
    log_growth_rate: float | None
    markov_bound: float


def moment_report(alpha: float, h: int, eps: float = 0.0) -> MomentReport:
    """Assemble the full report for n = floor(alpha*h)."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if h < 1:
        raise ValueError(f"need h >= 1, got {h}")
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    n = math.floor(alpha * h)
    if n < 1:
        raise ValueError(f"alpha={alpha} gives n=0 at h={h}")
    a_eff = n / h
    ep = expected_paths(n, h)
    # (a_eff e)^h / (3 sqrt(h)) < E < (a_eff e)^h / (2 sqrt(h)), from the
    # two-sided Stirling constants (exact because n = a_eff * h).
    log_core = h * math.log(a_eff * math.e) - 0.5 * math.log(h)
    bracket = (log_core - math.log(3.0), log_core - math.log(2.0))
    base = a_eff * (1.0 - eps) * math.e
    log_mean_lower = restricted_mean_lower(a_eff, eps, h)
    log_second = None
    pz = None
    growth = None
    if base > 1.0:
        log_second = second_moment_upper(a_eff, eps, h, log_mean=ep.log)
        pz = paley_zygmund_lower_log(log_mean_lower, log_second)
        growth = math.log(base)
    return MomentReport(
        alpha=alpha,
        n=n,
        h=h,
        eps=eps,
        alpha_effective=a_eff,
        log_expected_paths=ep.log,
        expected_paths_exact=ep.exact,
        stirling_lo=STIRLING_LO,
        stirling_hi=STIRLING_HI,
        log_mean_bracket=bracket,
        log_restricted_mean_lower=log_mean_lower,
        log_second_moment_upper=log_second,
        pz_lower=pz,
        log_growth_rate=growth,
        markov_bound=min(1.0, math.exp(ep.log)),
    )

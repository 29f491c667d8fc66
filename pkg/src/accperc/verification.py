"""The cross-module verification suite.

Every identity, oracle equivalence and inequality the package promises is
executed here as a named check with a measured value and tolerance.  The
quick budget finishes within a minute on commodity hardware; the thorough
budget re-runs everything at full acceptance scale.  Check failures are
report entries, never crashes.
"""

from __future__ import annotations

import math
import traceback
from dataclasses import dataclass, asdict
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import stats as sps

from . import experiments, model, moments, oracle, sampler
from .model import ModelParams
from .sampler import LevelConfig, TrialConfig
from .stats import StreamingStats, wilson_interval
from .streams import derive_key


@dataclass(frozen=True)
class CheckResult:
    check_name: str
    status: str  # "pass" | "fail"
    measured: float | int | str
    tolerance: float | int | str
    details: str

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json_obj(self) -> dict:
        return asdict(self)


def _result(name: str, ok: bool, measured, tolerance, details: str) -> CheckResult:
    return CheckResult(
        check_name=name,
        status="pass" if ok else "fail",
        measured=measured,
        tolerance=tolerance,
        details=details,
    )


def check_region_nesting(budget: str, seed: int) -> CheckResult:
    """Ramp membership implies floor membership, on random probes."""
    rng = np.random.default_rng(seed)
    trials = 2000 if budget == "quick" else 20000
    bad = 0
    for _ in range(trials):
        h = int(rng.integers(1, 12))
        eps = float(rng.uniform(0.0, 0.99))
        x = rng.uniform(0.0, 1.0, h)
        if model.in_ramp_region(x, eps, h) and not model.in_floor_region(x, eps):
            bad += 1
    return _result("region_nesting", bad == 0, bad, 0,
                   f"{trials} random (x, eps) probes")


def check_predicate_vs_vectorized(budget: str, seed: int) -> CheckResult:
    """count_report must agree with the per-path predicate recount,
    including on trees with tied labels (where a lax comparison would
    silently over-count)."""
    trees = 10 if budget == "quick" else 50
    mismatches = 0
    cases = 0
    for n, h in ((2, 4), (3, 3), (4, 2), (1, 5)):
        params = ModelParams(n=n, h=h)
        for t in range(trees):
            tree = oracle.sample_full_tree(params, derive_key(seed, n, h, t))
            for eps in (0.0, 0.3):
                fast = oracle.count_report(tree, eps)
                slow = oracle.count_by_predicates(tree, eps)
                cases += 1
                if fast != slow:
                    mismatches += 1
    tied = oracle.LabelledTree(
        params=ModelParams(n=2, h=3),
        root_key=0,
        levels=(np.full(2, 0.6), np.full(4, 0.6), np.full(8, 0.6)),
    )
    cases += 1
    if oracle.count_report(tied) != oracle.count_by_predicates(tied):
        mismatches += 1
    return _result("predicate_vs_vectorized", mismatches == 0, mismatches, 0,
                   f"{cases} tree/eps cases on four shapes plus a tied-label tree")


def check_fork_partition(budget: str, seed: int) -> CheckResult:
    """Sum of fork-spectrum counts equals the squared restricted count and
    the diagonal equals the restricted count, exactly, per tree."""
    trees = 200 if budget == "quick" else 1000
    bad = 0
    cases = 0
    for n, h in ((2, 4), (3, 3)):
        params = ModelParams(n=n, h=h)
        for eps in (0.0, 0.3):
            for t in range(trees):
                tree = oracle.sample_full_tree(params, derive_key(seed, n, h, t))
                rep = oracle.count_report(tree, eps)
                cases += 1
                if rep.fork.total != rep.n_restricted**2:
                    bad += 1
                elif rep.fork.counts[h] != rep.n_restricted:
                    bad += 1
    return _result("fork_partition", bad == 0, bad, 0,
                   f"{cases} trees over (2,4),(3,3) x eps in {{0, 0.3}}")


def check_pairs_partition(budget: str, seed: int) -> CheckResult:
    """Fork pair counts partition all n^(2h) ordered pairs."""
    n_max, h_max = (6, 6) if budget == "quick" else (10, 8)
    bad = 0
    cases = 0
    for n in range(1, n_max + 1):
        for h in range(1, h_max + 1):
            cases += 1
            total = sum(oracle.count_pairs_with_fork(n, h, k) for k in range(h + 1))
            if total != n ** (2 * h):
                bad += 1
    return _result("pairs_partition", bad == 0, bad, 0,
                   f"exact big-integer identity over {cases} (n, h)")


def check_joint_prob_endpoints(budget: str, seed: int) -> CheckResult:
    """Joint order probability at the fork extremes: 1/h! on the diagonal,
    (1/h!)^2 at independence."""
    bad = 0
    for h in range(1, 7):
        single = Fraction(1, math.factorial(h))
        if oracle.exact_joint_fork_prob(h, h) != single:
            bad += 1
        if 2 * h <= oracle.MAX_RANKS and oracle.exact_joint_fork_prob(h, 0) != single**2:
            bad += 1
    return _result("joint_prob_endpoints", bad == 0, bad, 0, "h = 1..6")


def check_first_moment(budget: str, seed: int) -> CheckResult:
    """Empirical mean path count within 4 standard errors of n^h/h!."""
    trials = 20_000 if budget == "quick" else 100_000
    worst = 0.0
    details = []
    for n, h in ((2, 3), (3, 3), (3, 4)):
        params = ModelParams(n=n, h=h)
        stats_n, _ = oracle.path_count_sample(params, trials, derive_key(seed, n, h))
        target = float(moments.expected_paths(n, h).exact)
        dev = abs(stats_n.mean - target) / stats_n.sem
        worst = max(worst, dev)
        details.append(f"(n={n},h={h}): {dev:.2f} SE")
    return _result("first_moment", worst <= 4.0, round(worst, 3), 4.0,
                   "; ".join(details) + f" at {trials} trees each")


def check_mean_bracket(budget: str, seed: int) -> CheckResult:
    """n^h/h! sits inside the two-sided Stirling bracket when n = alpha*h."""
    bad = 0
    cases = 0
    for h in (4, 10, 25, 60):
        for n in (h // 2, h, 2 * h):
            cases += 1
            a = n / h
            log_e = moments.expected_paths(n, h).log
            core = h * math.log(a * math.e) - 0.5 * math.log(h)
            if not (core - math.log(3.0) < log_e < core - math.log(2.0)):
                bad += 1
    return _result("mean_bracket", bad == 0, bad, 0,
                   f"{cases} integer-ratio instances")


def check_ordered_floors_mc(budget: str, seed: int) -> CheckResult:
    """Monte Carlo frequency of the ordered-with-floors event vs 1/(j+1)!."""
    samples = 200_000 if budget == "quick" else 1_000_000
    rng = np.random.default_rng(seed)
    worst = 0.0
    for j in range(1, 7):
        target = float(moments.ordered_floors_prob(j))
        floors = np.arange(1, j + 1) / (j + 1)
        draws = rng.random((samples, j))
        hits = np.all(np.diff(draws, axis=1) >= 0, axis=1) & np.all(
            draws >= floors, axis=1
        )
        p = hits.mean()
        se = math.sqrt(target * (1 - target) / samples)
        worst = max(worst, abs(p - target) / se)
    return _result("ordered_floors_mc", worst <= 4.0, round(worst, 3), 4.0,
                   f"j = 1..6 at {samples} samples")


def check_ordered_floors_quadrature(budget: str, seed: int) -> CheckResult:
    """Nested quadrature reproduces 1/(j+1)! for j <= 5."""
    worst = 0.0
    for j in range(2, 6):
        worst = max(worst, moments.ordered_floors_quadrature(j, tol=1e-8))
    return _result("ordered_floors_quadrature", worst < 1e-8, f"{worst:.3e}",
                   1e-8, "raw integral and all partial forms, j = 2..5")


def check_stirling_bracket(budget: str, seed: int) -> CheckResult:
    """Stirling ratio strictly inside (2, 3) for n = 1..10^4."""
    n = np.arange(1, 10_001)
    from scipy.special import gammaln
    ratios = np.exp(gammaln(n + 1) - 0.5 * np.log(n) - n * np.log(n) + n)
    ok = bool(np.all(ratios > 2.0) and np.all(ratios < 3.0))
    return _result("stirling_bracket", ok,
                   f"[{ratios.min():.6f}, {ratios.max():.6f}]", "(2, 3) strict",
                   "n = 1..10000 via log-gamma")


def check_fork_domination(budget: str, seed: int) -> CheckResult:
    """Exact per-fork second-moment terms never exceed the closed-form
    upper bound, over the entire rank-feasible supercritical grid."""
    worst = float("inf")
    cases = 0
    for h in range(2, 12):
        for k in range(max(1, 2 * h - oracle.MAX_RANKS), h):
            prob = oracle.exact_joint_fork_prob(h, k)
            for n in range(1, 4 * h + 1):
                alpha = n / h
                if alpha * math.e <= 1.0:
                    continue
                exact = oracle.count_pairs_with_fork(n, h, k) * prob
                if exact == 0:
                    continue
                log_exact = math.log(exact.numerator) - math.log(exact.denominator)
                margin = moments.fork_moment_upper(alpha, 0.0, h, k) - log_exact
                worst = min(worst, margin)
                cases += 1
    return _result("fork_domination", worst >= 0.0, round(worst, 6), 0.0,
                   f"min log-margin over {cases} (n, h, k) cases")


def check_second_moment_upper(budget: str, seed: int) -> CheckResult:
    """Exact E[N^2] on a small instance stays below the explicit bound, and
    the bound over the squared mean lower bound has the h^3 shape."""
    h, n = 2, 2
    exact = sum(
        oracle.count_pairs_with_fork(n, h, k) * oracle.exact_joint_fork_prob(h, k)
        for k in range(h + 1)
    )
    log_exact = math.log(float(exact))
    log_bound = moments.second_moment_upper(n / h, 0.0, h)
    ok = log_exact <= log_bound
    ratio_ok = True
    for hh in range(4, 201, 7):
        lm = moments.restricted_mean_lower(0.75, 0.0, hh)
        ls = moments.second_moment_upper(0.75, 0.0, hh)
        if ls - 2 * lm > math.log(40.0) + 3.0 * math.log(hh):
            ratio_ok = False
    return _result("second_moment_upper", ok and ratio_ok,
                   f"exact={float(exact):.4f}, bound={math.exp(log_bound):.4f}",
                   "exact <= bound; ratio <= 40 h^3",
                   "(n=2, h=2) exact rank enumeration; ratio sweep h <= 200")


def check_paley_zygmund(budget: str, seed: int) -> CheckResult:
    """Paley-Zygmund output stays in [0, 1] and is positive wherever the
    supercritical window is open."""
    bad = 0
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        mean = float(rng.uniform(0.1, 100.0))
        second = mean * mean * float(rng.uniform(1.0, 50.0))
        v = moments.paley_zygmund_lower(mean, second)
        if not 0.0 <= v <= 1.0:
            bad += 1
    rep = moments.moment_report(0.5, 50, eps=0.1)
    ok = bad == 0 and rep.pz_lower is not None and rep.pz_lower > 0.0
    return _result("paley_zygmund", ok, bad, 0,
                   f"1000 random pairs; report at alpha=0.5, h=50 gives "
                   f"pz={rep.pz_lower:.3e}")


def check_chernoff_vs_binomial(budget: str, seed: int) -> CheckResult:
    """exp(-mean/8) dominates the exact binomial lower tail at half mean."""
    worst = float("inf")
    cases = 0
    for r in (10, 100, 1000):
        for p in (0.1, 0.3, 0.5, 0.9):
            mean = r * p
            tail = float(sps.binom.cdf(math.floor(mean / 2.0), r, p))
            bound = moments.chernoff_bound(mean)
            worst = min(worst, bound - tail)
            cases += 1
    return _result("chernoff_vs_binomial", worst >= 0.0, f"{worst:.3e}", 0.0,
                   f"min (bound - exact tail) over {cases} (r, p) points")


def check_level_counts(budget: str, seed: int) -> CheckResult:
    """Banded level counts: means near n^j (eps/J)^j, per-level growth
    bounded by n, and the shortfall bound respected (clamped here)."""
    trials = 2000 if budget == "quick" else 10_000
    params = ModelParams(n=100, h=8)
    lc = LevelConfig(levels=4, width_eps=0.5)
    counts = sampler.level_counts_batch(params, lc, trials, derive_key(seed, 7))
    growth_bad = int(
        (counts[:, 1:] > params.n * counts[:, :-1]).sum()
    )
    worst = 0.0
    for j in range(1, lc.levels + 1):
        target = (params.n * lc.width_eps / lc.levels) ** j
        col = counts[:, j - 1]
        sem = col.std(ddof=1) / math.sqrt(trials)
        worst = max(worst, abs(col.mean() - target) / sem)
    threshold = (params.n * lc.width_eps / 8.0) ** lc.levels
    rate = float((counts[:, -1] <= threshold).mean())
    bound = moments.level_shortfall_bound(params.n, lc.width_eps)
    ok = worst <= 4.0 and growth_bad == 0 and rate <= bound
    return _result("level_counts", ok, round(worst, 3), 4.0,
                   f"{trials} trials, J=4, n=100, eps=0.5; growth violations "
                   f"{growth_bad}; shortfall {rate:.4f} <= bound {bound:.4f}"
                   + (" (clamped, vacuous)" if bound >= 1.0 else ""))


def check_pruning_soundness(budget: str, seed: int) -> CheckResult:
    """Lazy DFS existence agrees with full enumeration on shared streams."""
    trials = 200 if budget == "quick" else 1000
    bad = 0
    cases = 0
    for n, h in ((2, 10), (3, 6), (4, 5), (10, 4), (1, 6)):
        params = ModelParams(n=n, h=h)
        cfg = TrialConfig(params=params, mode="exists")
        for t in range(trials):
            s = derive_key(seed, n, h, t)
            lazy = sampler.simulate_exists(cfg, s)
            full = oracle.count_report(oracle.sample_full_tree(params, s)).exists
            cases += 1
            if lazy != full:
                bad += 1
    return _result("pruning_soundness", bad == 0, bad, 0,
                   f"{cases} shared-stream trials, n^h <= 10^4")


def check_capped_count(budget: str, seed: int) -> CheckResult:
    """Uncapped lazy counts equal exact enumeration on shared streams, and
    the cap saturates exactly at the cap."""
    trials = 200 if budget == "quick" else 1000
    bad = 0
    params = ModelParams(n=2, h=4)
    cfg = TrialConfig(params=params, mode="count", cap=10**6)
    for t in range(trials):
        s = derive_key(seed, 24, t)
        lazy = sampler.simulate_count_capped(cfg, s)
        full = oracle.count_report(oracle.sample_full_tree(params, s)).n_paths
        if lazy != full:
            bad += 1
    capped = sampler.simulate_count_capped(
        TrialConfig(params=ModelParams(n=5, h=1), mode="count", cap=3), seed
    )
    ok = bad == 0 and capped == 3
    return _result("capped_count", ok, bad, 0,
                   f"{trials} shared-stream trees (n=2, h=4); cap saturation at 3")


def check_coupled_monotone(budget: str, seed: int) -> CheckResult:
    """Coupled existence indicators are non-decreasing in n, every trial."""
    trials = 500 if budget == "quick" else 2000
    h = 10 if budget == "quick" else 16
    n_values = list(range(1, 9)) if budget == "quick" else [1, 2, 4, 6, 8, 10]
    ind = sampler.coupled_exists_batch(h, n_values, trials, derive_key(seed, 5))
    violations = int((np.diff(ind.astype(np.int8), axis=1) < 0).sum())
    return _result("coupled_monotone", violations == 0, violations, 0,
                   f"{trials} trials at h={h} over n in {n_values}")


def check_coupled_marginals(budget: str, seed: int) -> CheckResult:
    """Coupled and uncoupled estimates of the same point overlap at 95%."""
    trials = 2000 if budget == "quick" else 10_000
    params = ModelParams(n=3, h=5)
    est_plain = oracle.estimate_exist_prob_bruteforce(params, trials, derive_key(seed, 1))
    ind = sampler.coupled_exists_batch(params.h, [1, 2, 3], trials, derive_key(seed, 2))
    from .stats import TrialEstimate
    est_coupled = TrialEstimate.from_counts(int(ind[:, -1].sum()), trials)
    ok = est_plain.overlaps(est_coupled)
    return _result("coupled_marginals", ok,
                   f"{est_coupled.p_hat:.4f} vs {est_plain.p_hat:.4f}",
                   "overlapping 95% intervals",
                   f"(n=3, h=5), {trials} trials per estimator")


def check_single_path_rate(budget: str, seed: int) -> CheckResult:
    """With n = 1 the existence probability is exactly 1/h!."""
    trials = 200_000 if budget == "quick" else 1_000_000
    worst = 0.0
    for h in (3, 5, 8):
        cfg = TrialConfig(params=ModelParams(n=1, h=h), mode="exists")
        hits = int(sampler.exists_batch(cfg, trials, derive_key(seed, h)).sum())
        target = 1.0 / math.factorial(h)
        se = math.sqrt(target * (1 - target) / trials)
        worst = max(worst, abs(hits / trials - target) / se)
    return _result("single_path_rate", worst <= 4.0, round(worst, 3), 4.0,
                   f"h in (3, 5, 8) at {trials} trials")


def check_wilson(budget: str, seed: int) -> CheckResult:
    """Wilson interval contains p_hat, shrinks with trials, and covers the
    true p in at least 93% of binomial replications."""
    rng = np.random.default_rng(seed)
    ok = True
    for _ in range(500):
        t = int(rng.integers(1, 10_000))
        s = int(rng.integers(0, t + 1))
        lo, hi = wilson_interval(s, t)
        if not (0.0 <= lo <= s / t <= hi <= 1.0):
            ok = False
    w_small = np.subtract(*wilson_interval(500, 1000)[::-1])
    w_large = np.subtract(*wilson_interval(50, 100)[::-1])
    shrinks = w_small < w_large
    reps = 1000
    covered = 0
    draws = rng.binomial(200, 0.3, reps)
    for s in draws:
        lo, hi = wilson_interval(int(s), 200)
        if lo <= 0.3 <= hi:
            covered += 1
    coverage = covered / reps
    return _result("wilson_interval", ok and shrinks and coverage >= 0.93,
                   round(coverage, 4), ">= 0.93",
                   f"500 containment probes; width shrinks; coverage on "
                   f"Binomial(200, 0.3) x {reps}")


def check_merge_consistency(budget: str, seed: int) -> CheckResult:
    """Chunked merge equals sequential ingestion to 1e-10 relative."""
    rng = np.random.default_rng(seed)
    values = rng.normal(3.0, 2.0, 100_000)
    seq = StreamingStats()
    for x in values:
        seq = seq.update(float(x))
    merged = StreamingStats()
    for lo in range(0, len(values), 1037):
        part = StreamingStats()
        for x in values[lo:lo + 1037]:
            part = part.update(float(x))
        merged = merged.merge(part)
    rel = max(
        abs(merged.mean - seq.mean) / abs(seq.mean),
        abs(merged.m2 - seq.m2) / seq.m2,
    )
    return _result("merge_consistency", rel < 1e-10, f"{rel:.3e}", 1e-10,
                   "100000 normals in 1037-sized chunks vs sequential")


def check_markov_consistency(budget: str, seed: int) -> CheckResult:
    """Sweep estimates respect the Markov bound within sampling error."""
    trials = 2000 if budget == "quick" else 10_000
    cfg = experiments.SweepConfig(
        alpha_grid=(0.2, 0.3, 0.5), h_grid=(8, 12), trials_per_point=trials,
        master_seed=derive_key(seed, 3),
    )
    rows = experiments.run_sweep(cfg)
    worst = -float("inf")
    for row in rows:
        se = math.sqrt(max(row.p_hat * (1 - row.p_hat), 1e-12) / row.trials)
        worst = max(worst, row.p_hat - row.markov_bound - 4 * se)
    return _result("markov_consistency", worst <= 0.0, f"{worst:.3e}", 0.0,
                   f"{len(rows)} grid points at {trials} trials")


def check_atanh_bound(budget: str, seed: int) -> CheckResult:
    """Fork sum strictly below its inverse-tanh majorant."""
    bad = 0
    for h in (3, 10, 100, 1000, 10_000):
        total, bound = moments.fork_sum_atanh_bound(h)
        if not total < bound:
            bad += 1
    return _result("atanh_bound", bad == 0, bad, 0, "h in {3, 10, 100, 1000, 10000}")


def check_classifier(budget: str, seed: int) -> CheckResult:
    """The three canonical beta schedules get their expected verdicts."""
    grid = [int(round(x)) for x in np.geomspace(10, 100_000, 40)]
    cases = [
        (lambda h: 0.0, "tends_to_zero"),
        (lambda h: math.log(h) ** 2 / h, "tends_to_one"),
        (lambda h: math.log(h) / (2.0 * h), "indeterminate"),
    ]
    got = [moments.classify_regime(grid, fn).verdict for fn, _ in cases]
    want = [v for _, v in cases]
    return _result("regime_classifier", got == want, "; ".join(got),
                   "; ".join(want), "h grid geomspace(10, 1e5, 40)")


_CHECKS: list[Callable[[str, int], CheckResult]] = [
    check_region_nesting,
    check_predicate_vs_vectorized,
    check_fork_partition,
    check_pairs_partition,
    check_joint_prob_endpoints,
    check_first_moment,
    check_mean_bracket,
    check_ordered_floors_mc,
    check_ordered_floors_quadrature,
    check_stirling_bracket,
    check_fork_domination,
    check_second_moment_upper,
    check_paley_zygmund,
    check_chernoff_vs_binomial,
    check_level_counts,
    check_pruning_soundness,
    check_capped_count,
    check_coupled_monotone,
    check_coupled_marginals,
    check_single_path_rate,
    check_wilson,
    check_merge_consistency,
    check_markov_consistency,
    check_atanh_bound,
    check_classifier,
]


def run_verification_suite(budget: str = "quick", seed: int = 20260809) -> list[CheckResult]:
    """Run every check; a check that raises becomes a fail entry."""
    if budget not in ("quick", "thorough"):
        raise ValueError(f"budget must be quick or thorough, got {budget!r}")
    results = []
    for fn in _CHECKS:
        try:
            results.append(fn(budget, seed))
        except Exception:
            results.append(
                CheckResult(
                    check_name=fn.__name__.removeprefix("check_"),
                    status="fail",
                    measured="exception",
                    tolerance="none",
                    details=traceback.format_exc(limit=3),
                )
            )
    return results


def suite_passed(results: list[CheckResult]) -> bool:
    return all(r.passed for r in results)

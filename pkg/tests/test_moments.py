import math
from fractions import Fraction
from itertools import permutations

import mpmath
import numpy as np
import pytest
from scipy.stats import binom

from accperc.model import ModelParams
from accperc.moments import (
    chernoff_bound,
    classify_regime,
    expected_paths,
    fork_moment_upper,
    fork_sum_atanh_bound,
    level_shortfall_bound,
    moment_report,
    ordered_floors_prob,
    ordered_floors_quadrature,
    paley_zygmund_lower,
    paley_zygmund_lower_log,
    restricted_mean_lower,
    second_moment_upper,
    stirling_ratio,
)
from accperc.oracle import (
    count_pairs_with_fork,
    exact_joint_fork_prob,
    path_count_sample,
)


class TestExpectedPaths:
    @pytest.mark.parametrize("n,h,value", [(1, 1, 1), (2, 2, 2),
                                           (3, 3, Fraction(9, 2))])
    def test_exact_values(self, n, h, value):
        ep = expected_paths(n, h)
        assert ep.exact == value
        assert math.exp(ep.log) == pytest.approx(float(value), rel=1e-12)

    def test_two_by_two_via_rank_enumeration(self):
        # average the path count of the (n=2, h=2) tree over all 720 rank
        # assignments to its 6 labelled vertices
        paths = [(0, 2), (0, 3), (1, 4), (1, 5)]  # (level-1 slot, level-2 slot)
        total = 0
        for perm in permutations(range(6)):
            total += sum(1 for a, b in paths if perm[a] < perm[b])
        assert Fraction(total, math.factorial(6)) == expected_paths(2, 2).exact

    def test_large_instance_is_log_only(self):
        ep = expected_paths(1000, 500)
        assert ep.exact is None
        assert ep.log == pytest.approx(500 * math.log(1000) - float(mpmath.loggamma(501)), rel=1e-12)


class TestStirlingRatio:
    def test_n_one_is_e(self):
        assert stirling_ratio(1) == pytest.approx(math.e, rel=1e-12)

    def test_small_values_high_precision(self):
        for n in (2, 3, 10, 50):
            ref = mpmath.factorial(n) / (mpmath.sqrt(n) * (n / mpmath.e) ** n)
            assert stirling_ratio(n) == pytest.approx(float(ref), rel=1e-10)

    def test_limit_is_sqrt_two_pi(self):
        assert stirling_ratio(10**6) == pytest.approx(math.sqrt(2 * math.pi), abs=1e-4)

    def test_strictly_bracketed_sample(self):
        for n in (1, 2, 5, 17, 100, 3000, 10_000):
            assert 2.0 < stirling_ratio(n) < 3.0


class TestOrderedFloors:
    @pytest.mark.parametrize("j,value", [(1, Fraction(1, 2)),
                                         (2, Fraction(1, 6)),
                                         (4, Fraction(1, 120))])
    def test_exact_probability(self, j, value):
        assert ordered_floors_prob(j) == value

    def test_monte_carlo_agreement(self):
        rng = np.random.default_rng(23)
        for j in (2, 4):
            samples = 400_000
            draws = rng.random((samples, j))
            floors = np.arange(1, j + 1) / (j + 1)
            hits = np.all(np.diff(draws, axis=1) >= 0, axis=1) & np.all(
                draws >= floors, axis=1
            )
            target = float(ordered_floors_prob(j))
            se = math.sqrt(target * (1 - target) / samples)
            assert abs(hits.mean() - target) <= 4 * se

    @pytest.mark.parametrize("j,tol", [(2, 1e-9), (3, 1e-9), (5, 1e-8)])
    def test_quadrature_reproduces_closed_form(self, j, tol):
        assert ordered_floors_quadrature(j, tol=tol) < tol

    def test_quadrature_domain(self):
        with pytest.raises(ValueError):
            ordered_floors_quadrature(1)
        with pytest.raises(ValueError):
            ordered_floors_quadrature(7)


class TestRestrictedMeanLower:
    def test_critical_base_collapses_to_polynomial(self):
        for h in (2, 10, 100):
            got = restricted_mean_lower(1.0 / math.e, 0.0, h)
            assert got == pytest.approx(-math.log(3.0) - 1.5 * math.log(h), rel=1e-12)

    def test_decreasing_in_eps(self):
        values = [restricted_mean_lower(0.8, eps, 20) for eps in (0.0, 0.1, 0.3, 0.6)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_below_monte_carlo_restricted_mean(self):
        params = ModelParams(n=2, h=2)
        _, restricted = path_count_sample(params, 20_000, seed=24)
        bound = math.exp(restricted_mean_lower(1.0, 0.0, 2))
        assert bound <= restricted.mean + 4 * restricted.sem


class TestForkMomentUpper:
    def test_first_fork_closed_form(self):
        for h in (2, 5, 30):
            got = fork_moment_upper(0.9, 0.1, h, 1)
            want = math.log(math.e / 4.0) + (2 * h - 1) * math.log(0.9 * 0.9 * math.e)
            assert got == pytest.approx(want, rel=1e-12)

    def test_dominates_exact_term(self):
        # n=4, h=4, k=2: exact k-fork contribution vs the closed-form bound
        exact = count_pairs_with_fork(4, 4, 2) * exact_joint_fork_prob(4, 2)
        assert float(exact) <= math.exp(fork_moment_upper(1.0, 0.0, 4, 2))

    def test_decreasing_in_k_at_unit_alpha(self):
        for h in (6, 12, 30):
            terms = [fork_moment_upper(1.0, 0.0, h, k) for k in range(1, h)]
            assert all(a > b for a, b in zip(terms, terms[1:]))

    def test_k_range_enforced(self):
        with pytest.raises(ValueError):
            fork_moment_upper(1.0, 0.0, 5, 0)
        with pytest.raises(ValueError):
            fork_moment_upper(1.0, 0.0, 5, 5)


class TestSecondMomentUpper:
    def test_height_two_has_no_middle_forks(self):
        log_mean = expected_paths(2, 2).log
        got = second_moment_upper(1.0, 0.0, 2, log_mean=log_mean)
        want = math.log(
            math.exp(log_mean)
            + math.exp(2 * log_mean)
            + math.exp(fork_moment_upper(1.0, 0.0, 2, 1))
        )
        assert got == pytest.approx(want, rel=1e-12)

    def test_dominates_exact_small_second_moment(self):
        exact = sum(
            count_pairs_with_fork(2, 2, k) * exact_joint_fork_prob(2, k)
            for k in range(3)
        )
        assert float(exact) <= math.exp(second_moment_upper(1.0, 0.0, 2))

    def test_cubic_ratio_shape(self):
        # bound / (restricted mean lower bound)^2 grows no faster than h^3
        for h in range(4, 201, 7):
            log_ratio = second_moment_upper(0.75, 0.0, h) - 2 * restricted_mean_lower(
                0.75, 0.0, h
            )
            assert log_ratio <= math.log(40.0) + 3.0 * math.log(h)

    def test_requires_supercritical_base(self):
        with pytest.raises(ValueError):
            second_moment_upper(0.2, 0.0, 10)


class TestPaleyZygmund:
    def test_quarter_at_deterministic(self):
        assert paley_zygmund_lower(2.0, 4.0) == 0.25

    def test_matches_log_variant(self):
        lin = paley_zygmund_lower(3.0, 45.0)
        logv = paley_zygmund_lower_log(math.log(3.0), math.log(45.0))
        assert lin == pytest.approx(logv, rel=1e-12)

    def test_precondition(self):
        with pytest.raises(ValueError):
            paley_zygmund_lower(2.0, 3.0)
        with pytest.raises(ValueError):
            paley_zygmund_lower(0.0, 1.0)

    def test_combined_bound_positive_and_cubic_shaped(self):
        rep = moment_report(0.5, 50, eps=0.1)
        assert rep.pz_lower is not None and rep.pz_lower > 0.0
        assert 0.0 < rep.pz_lower <= 1.0


class TestChernoff:
    def test_zero_mean(self):
        assert chernoff_bound(0.0) == 1.0

    def test_mean_eight(self):
        assert chernoff_bound(8.0) == pytest.approx(1.0 / math.e, rel=1e-12)

    def test_dominates_exact_binomial_tail(self):
        mean = 50.0
        bound = chernoff_bound(mean)
        assert bound == pytest.approx(1.93045e-3, rel=1e-4)
        tail = float(binom.cdf(25, 100, 0.5))
        assert tail <= bound

    def test_grid_domination(self):
        for r in (10, 100, 1000):
            for p in (0.1, 0.3, 0.5, 0.9):
                mean = r * p
                tail = float(binom.cdf(math.floor(mean / 2.0), r, p))
                assert tail <= chernoff_bound(mean)


class TestLevelShortfallBound:
    def test_clamps_to_one(self):
        assert level_shortfall_bound(1, 0.5) == 1.0
        assert level_shortfall_bound(1, 0.5, clamp=False) == pytest.approx(4.0, rel=1e-4)

    def test_astronomically_small_at_scale(self):
        v = level_shortfall_bound(10**7, 0.5)
        assert 0.0 < v < 1e-15

    def test_eps_domain(self):
        with pytest.raises(ValueError):
            level_shortfall_bound(10, 0.0)
        with pytest.raises(ValueError):
            level_shortfall_bound(10, 1.0)


class TestForkSumAtanhBound:
    def test_h_three_values(self):
        total, bound = fork_sum_atanh_bound(3)
        assert total == pytest.approx(0.5, rel=1e-12)
        want = 2.0 / math.sqrt(3.0) * math.atanh(math.sqrt(2.0 / 3.0))
        assert bound == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("h", [3, 10, 100, 1000, 10_000])
    def test_sum_below_bound(self, h):
        total, bound = fork_sum_atanh_bound(h)
        assert total < bound

    def test_asymptotic_order(self):
        # bound / (log h / sqrt(h)) stays order one and drifts toward 1
        def ratio(h):
            _, bound = fork_sum_atanh_bound(h)
            return bound / (math.log(h) / math.sqrt(h))

        assert 1.0 < ratio(100) < 1.5
        assert ratio(10_000) < ratio(100)

    def test_minimum_height(self):
        with pytest.raises(ValueError):
            fork_sum_atanh_bound(2)


class TestClassifyRegime:
    GRID = [int(round(x)) for x in np.geomspace(10, 100_000, 40)]

    def test_zero_beta_tends_to_zero(self):
        assert classify_regime(self.GRID, lambda h: 0.0).verdict == "tends_to_zero"

    def test_log_squared_over_h_tends_to_one(self):
        res = classify_regime(self.GRID, lambda h: math.log(h) ** 2 / h)
        assert res.verdict == "tends_to_one"

    def test_boundary_schedule_is_indeterminate(self):
        res = classify_regime(self.GRID, lambda h: math.log(h) / (2.0 * h))
        assert res.verdict == "indeterminate"
        last = res.diagnostics[-1]
        assert last.to_zero == pytest.approx(0.0, abs=1e-9)
        assert last.to_one == pytest.approx(0.5, rel=1e-9)

    def test_verdict_marked_heuristic(self):
        res = classify_regime(self.GRID, lambda h: 0.0)
        assert "heuristic" in res.note


class TestMomentReport:
    def test_restricted_lower_below_mean(self):
        rep = moment_report(0.8, 40, eps=0.05)
        assert rep.log_restricted_mean_lower <= rep.log_expected_paths

    def test_mean_inside_stirling_bracket(self):
        # integer ratio so that the bracket is exact
        rep = moment_report(2.0, 25)
        lo, hi = rep.log_mean_bracket
        assert lo < rep.log_expected_paths < hi

    def test_growth_rate_matches_base(self):
        rep = moment_report(1.0, 30, eps=0.2)
        assert rep.log_growth_rate == pytest.approx(
            math.log(rep.alpha_effective * 0.8 * math.e), rel=1e-12
        )

    def test_subcritical_fields_absent(self):
        rep = moment_report(0.3, 20)
        assert rep.log_second_moment_upper is None
        assert rep.pz_lower is None
        assert rep.log_growth_rate is None

    def test_markov_bound_clamped(self):
        assert moment_report(2.0, 10).markov_bound == 1.0
        assert moment_report(0.25, 24).markov_bound == pytest.approx(7.637e-6, rel=1e-3)

    def test_records_both_alpha_and_n(self):
        rep = moment_report(0.3678794, 100)
        assert rep.alpha == 0.3678794
        assert rep.n == 36
        assert rep.alpha_effective == 0.36

    def test_infeasible_alpha(self):
        with pytest.raises(ValueError):
            moment_report(0.05, 10)

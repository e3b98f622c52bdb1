"""Split-sample inference: splitting, tests, variance propagation, power."""

import math
from statistics import NormalDist

import numpy as np
import pytest

from rulefront.errors import ConfigError, DataError, InsufficientDataError
from rulefront.frontier import pareto_filter, point_from_ruleset
from rulefront.inference import (
    SplitPlan,
    compare_groups,
    diff_in_means,
    plug_in_covariance,
    power,
    power_rank,
    split,
)

from conftest import make_dataset, ruleset_of

_N = NormalDist()


def outcome_dataset(n=400, effect=2.0, seed=0, cover_all=True):
    """Binary treatment, outcome = effect * d + noise, full-coverage column."""
    rng = np.random.default_rng(seed)
    d = rng.integers(0, 2, n)
    y = effect * d + rng.normal(size=n)
    cols = {"ALL": [1] * n} if cover_all else {}
    cols["HALF"] = (rng.uniform(size=n) < 0.5).astype(int).tolist()
    return make_dataset(cols, tau=rng.normal(size=n), y=y, d=d)


class TestSplit:
    def test_floor_rounding(self):
        data = make_dataset({"A": [1] * 10}, tau=np.arange(10.0))
        train, test = split(data, SplitPlan(train_fraction=0.7, seed=1,
                                            stratify=False))
        assert train.n == 7 and test.n == 3

    def test_deterministic(self):
        data = outcome_dataset(n=100)
        p = SplitPlan(seed=9)
        a_train, a_test = split(data, p)
        b_train, b_test = split(data, p)
        assert np.array_equal(a_train.tau, b_train.tau)
        assert np.array_equal(a_test.y, b_test.y)

    def test_partition_exhaustive_and_disjoint(self):
        data = outcome_dataset(n=101)
        train, test = split(data, SplitPlan(seed=2))
        assert train.n + test.n == data.n
        # tau values are continuous draws: multiset equality identifies rows
        assert sorted(np.concatenate([train.tau, test.tau])) == pytest.approx(
            sorted(data.tau)
        )

    def test_stratified_preserves_arm_shares(self):
        rng = np.random.default_rng(3)
        n = 200
        d = np.array([0, 1] * (n // 2))
        y = rng.normal(size=n)
        data = make_dataset({"A": [1] * n}, tau=rng.normal(size=n), y=y, d=d)
        train, test = split(data, SplitPlan(train_fraction=0.7, seed=4))
        for part in (train, test):
            share = part.d.mean()
            assert abs(share - 0.5) <= 1.0 / part.n + 1e-12

    def test_stratify_needs_both_arms(self):
        data = make_dataset(
            {"A": [1] * 10}, tau=np.arange(10.0), y=np.arange(10.0),
            d=[1] * 10,
        )
        with pytest.raises(DataError, match="arm"):
            split(data, SplitPlan(seed=0))

    def test_fraction_validation(self):
        with pytest.raises(ConfigError):
            SplitPlan(train_fraction=1.0)


class TestDiffInMeans:
    def test_known_effect_converges(self):
        data = outcome_dataset(n=20_000, effect=2.0, seed=5)
        rs = ruleset_of(data, ("ALL",))
        result = diff_in_means(rs, data)
        assert result.estimate == pytest.approx(2.0, abs=0.05)
        assert result.p_value < 1e-10
        assert result.kind == "fixed-threshold"

    def test_zero_variance_flagged_degenerate(self):
        data = make_dataset(
            {"ALL": [1] * 8},
            tau=np.arange(8.0),
            y=[3.0] * 8,
            d=[0, 1] * 4,
        )
        result = diff_in_means(ruleset_of(data, ("ALL",)), data)
        assert result.degenerate
        assert result.estimate == 0.0
        assert result.p_value == 1.0

    def test_threshold_at_estimate_gives_p_one(self):
        data = outcome_dataset(n=500, seed=6)
        rs = ruleset_of(data, ("ALL",))
        base = diff_in_means(rs, data)
        at_estimate = diff_in_means(rs, data, c=base.estimate)
        assert at_estimate.statistic == pytest.approx(0.0)
        assert at_estimate.p_value == pytest.approx(1.0)

    def test_insufficient_arm_data(self):
        data = make_dataset(
            {"ONE": [1, 1, 1, 0, 0, 0, 0, 0]},
            tau=np.arange(8.0),
            y=np.arange(8.0),
            d=[1, 1, 0, 1, 0, 1, 0, 1],  # only one control covered
        )
        with pytest.raises(InsufficientDataError):
            diff_in_means(ruleset_of(data, ("ONE",)), data)

    def test_requires_outcome_columns(self):
        data = make_dataset({"A": [1, 0, 1, 0]}, tau=[1, 2, 3, 4])
        with pytest.raises(DataError, match="outcome and treatment"):
            diff_in_means(ruleset_of(data, ("A",)), data)

    def test_one_sided_p_values(self):
        data = outcome_dataset(n=2000, effect=1.0, seed=7)
        rs = ruleset_of(data, ("ALL",))
        greater = diff_in_means(rs, data, sided="greater")
        less = diff_in_means(rs, data, sided="less")
        two = diff_in_means(rs, data, sided="two-sided")
        assert greater.p_value < 0.001
        assert less.p_value > 0.999
        assert two.p_value == pytest.approx(2 * greater.p_value, rel=1e-9)

    @pytest.mark.slow
    def test_null_calibration_quick(self):
        """Mini calibration run; the acceptance suite does 1000 replications."""
        rejections = 0
        reps = 400
        for rep in range(reps):
            rng = np.random.default_rng(1000 + rep)
            n = 300
            d = rng.integers(0, 2, n)
            y = rng.normal(size=n)  # independent of d
            data = make_dataset(
                {"ALL": [1] * n}, tau=rng.normal(size=n), y=y, d=d
            )
            res = diff_in_means(ruleset_of(data, ("ALL",)), data)
            rejections += res.p_value < 0.05
        assert 0.02 <= rejections / reps <= 0.08


class TestCompareGroups:
    def test_independent_variance_sum(self):
        result = compare_groups(2.0, 1.0, var_a=0.5, var_b=0.7, cov_ab=0.0)
        assert result.std_error == pytest.approx(math.sqrt(1.2))
        assert result.kind == "group-comparison"

    def test_perfect_correlation_collapse(self):
        result = compare_groups(1.5, 1.5, var_a=0.3, var_b=0.3, cov_ab=0.3)
        assert result.degenerate
        assert result.std_error == 0.0
        assert result.p_value == 1.0

    def test_cited_formula_value(self):
        result = compare_groups(3.0, 1.0, var_a=4.0, var_b=1.0, cov_ab=1.0)
        assert result.std_error == pytest.approx(math.sqrt(3.0))
        assert result.statistic == pytest.approx(2.0 / math.sqrt(3.0))

    def test_invalid_covariance_rejected(self):
        with pytest.raises(ConfigError):
            compare_groups(1.0, 0.0, var_a=1.0, var_b=1.0, cov_ab=1.5)
        with pytest.raises(ConfigError):
            compare_groups(1.0, 0.0, var_a=-1.0, var_b=1.0)

    def test_plug_in_covariance_subset_case(self):
        """Subgroup-vs-full-sample means: covariance matches the analytic
        plug-in Var(tau over overlap) * n_overlap / (n_a * n_b)."""
        rng = np.random.default_rng(11)
        tau = rng.normal(size=200)
        sub = np.zeros(200, dtype=bool)
        sub[:80] = True
        full = np.ones(200, dtype=bool)
        cov = plug_in_covariance(tau, sub, full)
        expected = tau[:80].var(ddof=1) * 80 / (80 * 200)
        assert cov == pytest.approx(expected)


class TestPower:
    def test_null_effect_gives_level(self):
        assert power(0.0, 1.0, 1.0, 100, 100, alpha_level=0.05) == pytest.approx(
            0.05
        )

    def test_boundary_heuristic_half(self):
        # |effect|/SE equal to the critical value gives power just above 0.5
        se = math.sqrt(1 / 100 + 1 / 100)
        z = _N.inv_cdf(0.975)
        got = power(z * se, 1.0, 1.0, 100, 100)
        assert got == pytest.approx(0.5, abs=0.01)

    def test_monotonicities(self):
        base = power(0.5, 1.0, 1.0, 50, 50)
        assert power(0.8, 1.0, 1.0, 50, 50) > base
        assert power(0.5, 1.0, 1.0, 200, 200) > base
        assert power(-0.5, 1.0, 1.0, 50, 50) == pytest.approx(base)

    def test_one_sided_beats_two_sided(self):
        two = power(0.4, 1.0, 1.0, 60, 60, sided="two-sided")
        one = power(0.4, 1.0, 1.0, 60, 60, sided="greater")
        assert one > two

    def test_vanishing_information_approaches_level(self):
        # tiny arms and huge noise: power collapses to the test level
        got = power(0.01, 5.0, 5.0, 2, 2, alpha_level=0.05)
        assert got == pytest.approx(0.05, abs=1e-3)
        assert got > 0.05

    def test_matches_monte_carlo(self):
        """10^4-draw Monte Carlo z-test rejection rate (the acceptance suite
        runs 10^5 draws on five settings)."""
        rng = np.random.default_rng(17)
        effect, sd1, sd0, n1, n0 = 0.45, 1.2, 0.9, 80, 120
        reps = 10_000
        y1 = rng.normal(effect, sd1, size=(reps, n1))
        y0 = rng.normal(0.0, sd0, size=(reps, n0))
        se = np.sqrt(y1.var(axis=1, ddof=1) / n1 + y0.var(axis=1, ddof=1) / n0)
        z = (y1.mean(axis=1) - y0.mean(axis=1)) / se
        crit = _N.inv_cdf(0.975)
        mc = float((np.abs(z) > crit).mean())
        assert power(effect, sd1, sd0, n1, n0) == pytest.approx(mc, abs=0.02)

    def test_parameter_validation(self):
        with pytest.raises(ConfigError):
            power(0.5, 0.0, 1.0, 50, 50)
        with pytest.raises(ConfigError):
            power(0.5, 1.0, 1.0, 1, 50)
        with pytest.raises(ConfigError):
            power(0.5, 1.0, 1.0, 50, 50, alpha_level=1.5)


class TestPowerRank:
    def _front(self, data, *rule_groups):
        points = [
            point_from_ruleset(ruleset_of(data, *rules), data)
            for rules in rule_groups
        ]
        return pareto_filter(points)

    def test_higher_support_equal_effect_has_more_power(self):
        rng = np.random.default_rng(19)
        n = 2000
        d = rng.integers(0, 2, n)
        y = 1.0 * d + rng.normal(size=n)
        half = np.zeros(n, dtype=int)
        half[: n // 2] = 1
        quarter = np.zeros(n, dtype=int)
        quarter[: n // 4] = 1
        # tau decreasing by block so both coverages are Pareto points
        tau = np.concatenate(
            [
                rng.normal(3, 0.1, n // 4),
                rng.normal(2, 0.1, n // 4),
                rng.normal(1, 0.1, n - n // 2),
            ]
        )
        data = make_dataset(
            {"HALF": half.tolist(), "QUARTER": quarter.tolist()},
            tau=tau, y=y, d=d,
        )
        front = self._front(data, (("QUARTER",),), (("HALF",),))
        assert len(front) == 2
        rows = power_rank(front, data, test_size=600)
        by_support = sorted(rows, key=lambda r: r.point.support_rate)
        assert by_support[1].power >= by_support[0].power
        assert rows[0].power == max(r.power for r in rows)

    def test_insufficient_data_flagged(self):
        rng = np.random.default_rng(23)
        n = 50
        d = np.ones(n, dtype=int)  # no controls anywhere
        d[:10] = 0
        tiny = np.zeros(n, dtype=int)
        tiny[:2] = 1  # covers 2 observations, both control
        data = make_dataset(
            {"TINY": tiny.tolist(), "ALL": [1] * n},
            tau=rng.normal(size=n),
            y=rng.normal(size=n),
            d=d,
        )
        front = self._front(data, (("TINY",),), (("ALL",),))
        rows = power_rank(front, data, test_size=30)
        flagged = [r for r in rows if r.power is None]
        assert len(flagged) == 1
        assert "insufficient" in flagged[0].note
        assert rows[-1] is flagged[0]  # flagged rows sort last

"""Pareto filtering and the sweep contract."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rulefront.anneal import AnnealerConfig
from rulefront.errors import SearchError
from rulefront.frontier import (
    FrontierPoint,
    pareto_filter,
    point_from_ruleset,
    sweep,
)
from rulefront.mining import mine_rules
from rulefront.objective import Constraints, ObjectiveConfig, evaluate

from conftest import make_dataset, ruleset_of


@pytest.fixture
def toy_data():
    return make_dataset(
        {"A": [1, 1, 0, 0], "B": [0, 1, 1, 0], "C": [0, 0, 0, 1]},
        tau=[1.0, 2.0, 3.0, 4.0],
    )


def synthetic_point(toy_data, support_rate, effect, fingerprint, alpha=None,
                    rules=("A",), objective=None):
    return FrontierPoint(
        ruleset=ruleset_of(toy_data, rules) if isinstance(rules[0], str)
        else ruleset_of(toy_data, *rules),
        support_rate=support_rate,
        effect=effect,
        fingerprint=fingerprint,
        alpha=alpha,
        objective=objective,
    )


def quadratic_dominance_oracle(points):
    """Independent O(n^2) pairwise dominance check."""
    out = []
    for p in points:
        if not any(
            q.support_rate >= p.support_rate
            and q.effect >= p.effect
            and (q.support_rate > p.support_rate or q.effect > p.effect)
            for q in points
            if q is not p
        ):
            out.append(p)
    return out


class TestParetoFilter:
    def test_single_point_survives(self, toy_data):
        p = synthetic_point(toy_data, 0.5, 2.0, "f1")
        assert pareto_filter([p]).points == (p,)

    def test_strict_domination(self, toy_data):
        p = synthetic_point(toy_data, 0.2, 5.0, "f1")
        q = synthetic_point(toy_data, 0.3, 6.0, "f2")
        assert pareto_filter([p, q]).points == (q,)

    def test_weak_domination_removed(self, toy_data):
        p = synthetic_point(toy_data, 0.2, 5.0, "f1")
        q = synthetic_point(toy_data, 0.3, 5.0, "f2")  # same effect, more support
        assert pareto_filter([p, q]).points == (q,)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.floats(0.01, 1.0), st.floats(-5, 5)
            ),
            min_size=1,
            max_size=50,
            unique=True,
        )
    )
    def test_matches_quadratic_oracle(self, pairs):
        data = make_dataset(
            {"A": [1, 1, 0, 0], "B": [0, 1, 1, 0], "C": [0, 0, 0, 1]},
            tau=[1.0, 2.0, 3.0, 4.0],
        )
        points = [
            synthetic_point(data, s, e, f"fp{i}") for i, (s, e) in enumerate(pairs)
        ]
        got = {p.fingerprint for p in pareto_filter(points)}
        expected_pts = quadratic_dominance_oracle(points)
        # equal-metric ties collapse to one representative
        by_metrics = {}
        for p in expected_pts:
            by_metrics.setdefault((p.support_rate, p.effect), []).append(p)
        assert len(got) == len(by_metrics)
        for group in by_metrics.values():
            assert sum(1 for p in group if p.fingerprint in got) == 1

    def test_idempotent_and_order_insensitive(self, toy_data):
        rng = np.random.default_rng(0)
        points = [
            synthetic_point(
                toy_data, float(rng.uniform(0.05, 1)), float(rng.normal()), f"f{i}"
            )
            for i in range(30)
        ]
        once = pareto_filter(points)
        assert pareto_filter(once.points).points == once.points
        shuffled = list(points)
        rng.shuffle(shuffled)
        assert pareto_filter(shuffled).points == once.points

    def test_coverage_identical_keeps_lowest_alpha(self, toy_data):
        a = synthetic_point(toy_data, 0.5, 2.0, "same", alpha=1.0)
        b = synthetic_point(toy_data, 0.5, 2.0, "same", alpha=0.25)
        got = pareto_filter([a, b])
        assert len(got) == 1
        assert got.points[0].alpha == 0.25

    def test_metric_identical_keeps_lower_complexity(self, toy_data):
        a = synthetic_point(toy_data, 0.5, 2.0, "fa", alpha=1.0,
                            rules=(("A", "B"), ("C",)))
        b = synthetic_point(toy_data, 0.5, 2.0, "fb", alpha=1.0, rules=("A",))
        got = pareto_filter([a, b])
        assert len(got) == 1
        assert got.points[0].fingerprint == "fb"

    def test_sorted_support_ascending_effect_decreasing(self, toy_data):
        rng = np.random.default_rng(1)
        points = [
            synthetic_point(
                toy_data, float(rng.uniform(0.05, 1)), float(rng.normal()), f"f{i}"
            )
            for i in range(40)
        ]
        front = pareto_filter(points)
        supports = [p.support_rate for p in front]
        effects = [p.effect for p in front]
        assert supports == sorted(supports)
        assert all(b > a for a, b in zip(supports, supports[1:]))
        assert all(b < a for a, b in zip(effects, effects[1:]))


class TestSweep:
    def _setup(self, seed=0, n=64):
        rng = np.random.default_rng(seed)
        base = rng.integers(0, 2, size=(4, n)).astype(bool)
        cols, var_of = {}, {}
        for v in range(4):
            cols[f"v{v}=1"] = base[v].astype(int).tolist()
            cols[f"v{v}=0"] = (~base[v]).astype(int).tolist()
            var_of[f"v{v}=1"] = v
            var_of[f"v{v}=0"] = v
        data = make_dataset(cols, tau=rng.normal(size=n), variable_of=var_of)
        constraints = Constraints(l_max=2, c_max=4)
        pool = mine_rules(data, constraints, min_support=0.0)
        return data, pool, constraints

    def test_degenerate_single_value_sweep(self):
        data, pool, constraints = self._setup()
        cfg = AnnealerConfig(n_iter=200, seed=5, restarts=1)
        result = sweep(data, pool, [0.5], cfg, constraints, ObjectiveConfig())
        assert len(result.per_alpha) == 1
        assert not result.per_alpha[0].failed
        assert len(result.front) == 1
        point = result.front.points[0]
        assert point.alpha == 0.5
        assert point.ruleset == result.per_alpha[0].result.ruleset

    def test_objective_reevaluated_from_scratch(self):
        data, pool, constraints = self._setup(seed=2)
        cfg = AnnealerConfig(n_iter=300, seed=7, restarts=2)
        result = sweep(data, pool, [0.1, 1.0, 3.0], cfg, constraints,
                       ObjectiveConfig())
        for p in result.front:
            fresh = evaluate(p.ruleset, data, ObjectiveConfig(alpha=p.alpha))
            assert p.objective == fresh
            fresh_point = point_from_ruleset(p.ruleset, data)
            assert p.support_rate == fresh_point.support_rate
            assert p.effect == fresh_point.effect

    def test_empty_grid_is_error(self):
        data, pool, constraints = self._setup()
        with pytest.raises(SearchError):
            sweep(data, pool, [], AnnealerConfig(n_iter=10), constraints,
                  ObjectiveConfig())

    def test_per_value_failure_isolated(self, monkeypatch):
        data, pool, constraints = self._setup(seed=3)
        cfg = AnnealerConfig(n_iter=50, seed=11, restarts=1)
        import rulefront.frontier as frontier_mod

        real = frontier_mod.run_restarts
        calls = {"n": 0}

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 1:
                raise SearchError("injected failure")
            return real(*args, **kwargs)

        monkeypatch.setattr(frontier_mod, "run_restarts", flaky)
        result = sweep(data, pool, [0.2, 2.0], cfg, constraints, ObjectiveConfig())
        assert result.per_alpha[0].failed
        assert "injected failure" in result.per_alpha[0].error
        assert not result.per_alpha[1].failed
        assert len(result.front) >= 1

    def test_all_failed_sweep_raises(self, monkeypatch):
        data, pool, constraints = self._setup(seed=4)
        import rulefront.frontier as frontier_mod

        def broken(*args, **kwargs):
            raise SearchError("boom")

        monkeypatch.setattr(frontier_mod, "run_restarts", broken)
        with pytest.raises(SearchError, match="every sweep value failed"):
            sweep(data, pool, [0.5, 1.0], AnnealerConfig(n_iter=10), constraints,
                  ObjectiveConfig())

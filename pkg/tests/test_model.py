"""Coverage semantics, canonical forms, and the text grammar."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rulefront.errors import DataError, StructuralError
from rulefront.model import (
    CoverageMask,
    Rule,
    RuleSet,
    coverage_of_rule,
    coverage_of_ruleset,
    format_ruleset,
    parse_ruleset,
    subgroup_effect,
)

from conftest import (
    make_dataset,
    random_dataset,
    row_scan_rule,
    row_scan_ruleset,
    rule_of,
    ruleset_of,
)


class TestCoverageOfRule:
    def test_conjunction_is_bitwise_and(self, four_obs):
        mask = coverage_of_rule(rule_of(four_obs, "A", "B"), four_obs)
        assert mask.bits.tolist() == [True, False, False, False]

    def test_single_condition_returns_column(self, four_obs):
        mask = coverage_of_rule(rule_of(four_obs, "A"), four_obs)
        assert mask.bits.tolist() == [True, True, False, False]

    def test_matches_row_scan_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            data = random_dataset(rng, n=64, n_vars=6)
            refs = rng.choice(data.n_columns, size=3, replace=False)
            vars_seen = set()
            conds = []
            for ref in refs:
                m = data.meta[int(ref)]
                if m.variable_id in vars_seen:
                    continue
                vars_seen.add(m.variable_id)
                conds.append(data.condition(int(ref)))
            rule = Rule(conds)
            got = coverage_of_rule(rule, data)
            assert np.array_equal(got.bits, row_scan_rule(data, rule))

    def test_unknown_column_is_structural_error(self, four_obs):
        cond = four_obs.condition(0)
        rule = Rule([cond])
        object.__setattr__(rule, "_key", (99,))
        with pytest.raises(StructuralError):
            coverage_of_rule(rule, four_obs)


class TestCoverageOfRuleSet:
    def test_union_is_bitwise_or(self, four_obs):
        rs = ruleset_of(four_obs, ("A", "B"), ("C",))
        mask = coverage_of_ruleset(rs, four_obs)
        assert mask.bits.tolist() == [True, False, True, True]

    def test_empty_ruleset_covers_nothing(self, four_obs):
        mask = coverage_of_ruleset(RuleSet(), four_obs)
        assert mask.popcount == 0

    def test_matches_row_scan_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            data = random_dataset(rng, n=48, n_vars=6)
            singles = rng.choice(data.n_columns, size=3, replace=False)
            try:
                rs = RuleSet(Rule([data.condition(int(j))]) for j in singles)
            except StructuralError:
                continue  # picked two polarities of one variable
            got = coverage_of_ruleset(rs, data)
            assert np.array_equal(got.bits, row_scan_ruleset(data, rs))


class TestSubgroupEffect:
    def test_mean_over_covered(self, four_obs):
        mask = CoverageMask(np.array([False, False, True, True]))
        assert subgroup_effect(mask, four_obs) == pytest.approx(3.5)

    def test_full_coverage_is_global_mean(self, four_obs):
        mask = CoverageMask(np.ones(4, dtype=bool))
        assert subgroup_effect(mask, four_obs) == pytest.approx(2.5)

    def test_empty_coverage_is_nan(self, four_obs):
        mask = CoverageMask(np.zeros(4, dtype=bool))
        assert np.isnan(subgroup_effect(mask, four_obs))

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(3)
        data = random_dataset(rng, n=50, n_vars=4)
        bits = rng.integers(0, 2, size=50).astype(bool)
        expected = sum(data.tau[i] for i in range(50) if bits[i]) / bits.sum()
        assert subgroup_effect(CoverageMask(bits), data) == pytest.approx(expected)


class TestStructuralInvariants:
    def test_rule_needs_conditions(self):
        with pytest.raises(StructuralError):
            Rule([])

    def test_rule_rejects_duplicate_condition(self, four_obs):
        c = four_obs.condition(0)
        with pytest.raises(StructuralError):
            Rule([c, c])

    def test_rule_rejects_two_bins_of_one_variable(self):
        data = make_dataset(
            {"W=1": [1, 0], "W=0": [0, 1]},
            tau=[0.0, 1.0],
            variable_of={"W=1": 0, "W=0": 0},
        )
        with pytest.raises(StructuralError):
            Rule([data.condition(0), data.condition(1)])

    def test_ruleset_rejects_duplicates(self, four_obs):
        r = rule_of(four_obs, "A")
        with pytest.raises(StructuralError):
            RuleSet([r, rule_of(four_obs, "A")])

    def test_ruleset_rejects_redundant_superset(self, four_obs):
        with pytest.raises(StructuralError):
            RuleSet([rule_of(four_obs, "A"), rule_of(four_obs, "A", "B")])

    def test_canonical_order_is_stable(self, four_obs):
        rs1 = ruleset_of(four_obs, ("C",), ("A", "B"))
        rs2 = ruleset_of(four_obs, ("B", "A"), ("C",))
        assert rs1 == rs2
        assert str(rs1) == str(rs2)
        assert np.array_equal(
            coverage_of_ruleset(rs1, four_obs).bits,
            coverage_of_ruleset(rs2, four_obs).bits,
        )

    def test_complexity_is_sum_of_lengths(self, four_obs):
        rs = ruleset_of(four_obs, ("A", "B"), ("C",))
        assert rs.complexity == 3


class TestCoverageAlgebra:
    def test_monotone_in_rules_and_conditions(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            data = random_dataset(rng, n=40, n_vars=5)
            base = ruleset_of(data, ("v0=1",))
            grown = ruleset_of(data, ("v0=1",), ("v1=1",))
            narrowed = ruleset_of(data, ("v0=1", "v1=1"))
            m_base = coverage_of_ruleset(base, data).bits
            # adding a rule never clears a bit
            assert not np.any(m_base & ~coverage_of_ruleset(grown, data).bits)
            # adding a condition never sets a bit
            assert not np.any(coverage_of_ruleset(narrowed, data).bits & ~m_base)

    def test_popcount_bounds(self):
        rng = np.random.default_rng(9)
        a = CoverageMask(rng.integers(0, 2, 64).astype(bool))
        b = CoverageMask(rng.integers(0, 2, 64).astype(bool))
        assert (a | b).popcount <= a.popcount + b.popcount
        assert (a & b).popcount <= min(a.popcount, b.popcount)

    def test_popcount_matches_bits(self):
        rng = np.random.default_rng(13)
        bits = rng.integers(0, 2, 100).astype(bool)
        assert CoverageMask(bits).popcount == int(bits.sum())

    def test_fingerprint_distinguishes_coverage(self):
        a = CoverageMask(np.array([True, False, True]))
        b = CoverageMask(np.array([True, True, False]))
        assert a.fingerprint() != b.fingerprint()
        assert a.fingerprint() == CoverageMask(a.bits.copy()).fingerprint()


@st.composite
def _random_ruleset_text(draw):
    """Random valid rule sets over a fixed 6-variable, 12-column universe."""
    n_rules = draw(st.integers(1, 3))
    used = []
    rules = []
    for _ in range(n_rules):
        length = draw(st.integers(1, 3))
        vars_ = draw(
            st.lists(st.integers(0, 5), min_size=length, max_size=length,
                     unique=True)
        )
        polarity = [draw(st.integers(0, 1)) for _ in vars_]
        key = tuple(sorted(2 * v + p for v, p in zip(vars_, polarity)))
        rules.append(key)
    # structural validity: drop subset/superset duplicates
    ok = []
    for k in rules:
        sk = set(k)
        if any(sk <= set(o) or set(o) <= sk for o in ok):
            continue
        ok.append(k)
    return ok


class TestGrammar:
    def test_round_trip_example(self, four_obs):
        rs = ruleset_of(four_obs, ("A", "B"), ("C",))
        text = format_ruleset(rs)
        assert text == "(A & B) | (C)"
        assert parse_ruleset(text, four_obs) == rs

    @settings(max_examples=60, deadline=None)
    @given(_random_ruleset_text())
    def test_round_trip_random(self, keys):
        rng = np.random.default_rng(0)
        data = random_dataset(rng, n=16, n_vars=6)
        rs = RuleSet(Rule(data.condition(ref) for ref in key) for key in keys)
        assert parse_ruleset(format_ruleset(rs), data) == rs

    def test_bad_text_raises(self, four_obs):
        with pytest.raises(StructuralError):
            parse_ruleset("A & B", four_obs)
        with pytest.raises(StructuralError):
            parse_ruleset("(nope)", four_obs)
        with pytest.raises(StructuralError):
            parse_ruleset("", four_obs)

    def test_reserved_tokens_rejected_in_display(self):
        with pytest.raises(DataError):
            make_dataset({"a | b": [1, 0]}, tau=[0.0, 1.0])

"""Shared helpers: tiny dataset builders and brute-force reference oracles."""

import numpy as np
import pytest

from rulefront.model import ColumnMeta, Dataset, Rule, RuleSet


def make_dataset(columns, tau, y=None, d=None, variable_of=None):
    """Dataset from a {name: 0/1 list} mapping; by default every column is
    its own variable (so any conditions can be conjoined)."""
    names = list(columns)
    meta = []
    for i, name in enumerate(names):
        vid = i if variable_of is None else variable_of[name]
        meta.append(ColumnMeta(variable=f"v{vid}", variable_id=vid, op="eq",
                               value=1, display=name))
    matrix = np.asarray([columns[n] for n in names], dtype=bool)
    return Dataset(columns=matrix, tau=np.asarray(tau, dtype=float),
                   meta=meta, y=y, d=d)


def rule_of(data, *names):
    return Rule(data.condition_by_display(n) for n in names)


def ruleset_of(data, *rules):
    return RuleSet(rule_of(data, *r) for r in rules)


def random_dataset(rng, n=64, n_vars=6, polar=True):
    """Random binary dataset with both polarities per variable and
    standard-normal effect estimates."""
    base = rng.integers(0, 2, size=(n_vars, n)).astype(bool)
    columns, meta = [], []
    for v in range(n_vars):
        columns.append(base[v])
        meta.append(ColumnMeta(f"v{v}", v, "eq", 1, f"v{v}=1"))
        if polar:
            columns.append(~base[v])
            meta.append(ColumnMeta(f"v{v}", v, "eq", 0, f"v{v}=0"))
    tau = rng.normal(size=n)
    return Dataset(columns=np.asarray(columns), tau=tau, meta=meta)


def row_scan_rule(data, rule):
    """Brute-force per-observation membership check for a rule."""
    out = np.zeros(data.n, dtype=bool)
    for i in range(data.n):
        out[i] = all(bool(data.columns[ref][i]) for ref in rule.key)
    return out


def row_scan_ruleset(data, rs):
    out = np.zeros(data.n, dtype=bool)
    for i in range(data.n):
        out[i] = any(
            all(bool(data.columns[ref][i]) for ref in rule.key)
            for rule in rs.rules
        )
    return out


@pytest.fixture
def four_obs():
    """The running 4-observation example: tau = 1..4."""
    return make_dataset(
        {"A": [1, 1, 0, 0], "B": [1, 0, 1, 0], "C": [0, 0, 1, 1]},
        tau=[1.0, 2.0, 3.0, 4.0],
    )

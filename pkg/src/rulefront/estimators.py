"""Scikit-learn style estimators wrapping the search pipeline.

``SubgroupSearch`` finds a single rule set at a fixed size/effect trade-off;
``FrontierSearch`` sweeps the trade-off hyperparameter and keeps the Pareto
front. Both discretize raw covariates at fit time (quantile cuts are learned
from the fit data and re-applied at prediction time) and predict subgroup
membership for new rows.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .anneal import AnnealerConfig, run_restarts
from .frontier import DEFAULT_ALPHA_GRID, sweep
from .mining import apply_columns, build_columns, cull, mine_rules
from .model import Dataset, RuleSet
from .objective import (
    MULTIPLICATIVE,
    NORMALIZED_MEAN,
    Constraints,
    ObjectiveConfig,
)
from .validation import as_frame, check_tau, resolve_spec


def _membership(ruleset: RuleSet, columns: np.ndarray) -> np.ndarray:
    out = np.zeros(columns.shape[1], dtype=bool)
    for rule in ruleset.rules:
        m = columns[rule.key[0]].copy()
        for ref in rule.key[1:]:
            m &= columns[ref]
        out |= m
    return out.astype(np.int64)


class _SearchBase(BaseEstimator):
    def _prepare(self, X, tau):
        frame = as_frame(X)
        tau = check_tau(tau, len(frame))
        spec = resolve_spec(frame, self.feature_types, self.quantiles)
        columns, meta = build_columns(frame, spec)
        dataset = Dataset(columns=columns, tau=tau, meta=meta)
        constraints = Constraints(
            l_max=self.l_max, c_max=self.c_max, n_rules_cap=self.n_rules_cap
        )
        pool = mine_rules(dataset, constraints, min_support=self.min_support)
        pool = cull(pool, self.n_rules, dataset)
        return dataset, constraints, pool

    def _annealer_config(self) -> AnnealerConfig:
        return AnnealerConfig(
            n_iter=self.n_iter,
            q=self.q,
            fg_scale=self.fg_scale,
            fg_switch=self.fg_switch,
            eta=self.eta,
            t0_scale=self.t0_scale,
            t0_probes=self.t0_probes,
            seed=self.random_state,
            restarts=self.restarts,
        )

    def _columns_for(self, X) -> np.ndarray:
        return apply_columns(as_frame(X), self.meta_)


class SubgroupSearch(_SearchBase):
    """Find one interpretable subgroup (an OR-of-ANDs rule set) whose
    covered observations have elevated effect estimates.

    Parameters follow the library defaults; ``alpha`` sets the weight on
    subgroup size (0 ignores size entirely). After ``fit(X, tau)`` the
    discovered rule set is in ``ruleset_`` (text form: ``str(ruleset_)``)
    and ``predict(X)`` returns 0/1 subgroup membership.
    """

    def __init__(
        self,
        alpha=1.0,
        objective=MULTIPLICATIVE,
        linear_weight=0.5,
        effect_term=NORMALIZED_MEAN,
        l_max=3,
        c_max=9,
        n_rules_cap=None,
        min_support=0.01,
        n_rules=500,
        n_iter=5000,
        restarts=5,
        q=0.1,
        fg_scale=10.0,
        fg_switch=0.5,
        eta=None,
        t0_scale=1.5,
        t0_probes=100,
        feature_types=None,
        quantiles=(0.25, 0.5, 0.75),
        random_state=0,
        n_jobs=1,
    ):
        self.alpha = alpha
        self.objective = objective
        self.linear_weight = linear_weight
        self.effect_term = effect_term
        self.l_max = l_max
        self.c_max = c_max
        self.n_rules_cap = n_rules_cap
        self.min_support = min_support
        self.n_rules = n_rules
        self.n_iter = n_iter
        self.restarts = restarts
        self.q = q
        self.fg_scale = fg_scale
        self.fg_switch = fg_switch
        self.eta = eta
        self.t0_scale = t0_scale
        self.t0_probes = t0_probes
        self.feature_types = feature_types
        self.quantiles = quantiles
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, tau):
        dataset, constraints, pool = self._prepare(X, tau)
        objective_cfg = ObjectiveConfig(
            alpha=self.alpha,
            kind=self.objective,
            linear_weight=self.linear_weight,
            effect_term_mode=self.effect_term,
        )
        best, chains = run_restarts(
            dataset, pool, self._annealer_config(), constraints, objective_cfg,
            n_jobs=self.n_jobs,
        )
        self.meta_ = dataset.meta
        self.dataset_ = dataset
        self.pool_size_ = len(pool)
        self.ruleset_ = best.ruleset
        self.objective_value_ = best.objective
        self.t0_ = best.t0
        self.n_restarts_run_ = len(chains)
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "ruleset_")
        return _membership(self.ruleset_, self._columns_for(X))


class FrontierSearch(_SearchBase):
    """Sweep the size/effect trade-off and keep the Pareto front.

    ``fit(X, tau)`` stores the deduplicated front in ``front_`` (and the raw
    per-value results in ``sweep_result_``); ``transform(X)`` returns an
    (n_samples, n_points) 0/1 membership matrix, one column per frontier
    point sorted by support rate ascending. With ``objective="linear"`` the
    ``alphas`` grid values are interpreted as the linear weights.
    """

    def __init__(
        self,
        alphas=DEFAULT_ALPHA_GRID,
        objective=MULTIPLICATIVE,
        linear_weight=0.5,
        effect_term=NORMALIZED_MEAN,
        l_max=3,
        c_max=9,
        n_rules_cap=None,
        min_support=0.01,
        n_rules=500,
        n_iter=5000,
        restarts=5,
        q=0.1,
        fg_scale=10.0,
        fg_switch=0.5,
        eta=None,
        t0_scale=1.5,
        t0_probes=100,
        feature_types=None,
        quantiles=(0.25, 0.5, 0.75),
        random_state=0,
        n_jobs=1,
    ):
        self.alphas = alphas
        self.objective = objective
        self.linear_weight = linear_weight
        self.effect_term = effect_term
        self.l_max = l_max
        self.c_max = c_max
        self.n_rules_cap = n_rules_cap
        self.min_support = min_support
        self.n_rules = n_rules
        self.n_iter = n_iter
        self.restarts = restarts
        self.q = q
        self.fg_scale = fg_scale
        self.fg_switch = fg_switch
        self.eta = eta
        self.t0_scale = t0_scale
        self.t0_probes = t0_probes
        self.feature_types = feature_types
        self.quantiles = quantiles
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, tau):
        dataset, constraints, pool = self._prepare(X, tau)
        objective_cfg = ObjectiveConfig(
            kind=self.objective,
            linear_weight=self.linear_weight,
            effect_term_mode=self.effect_term,
        )
        result = sweep(
            dataset, pool, list(self.alphas), self._annealer_config(),
            constraints, objective_cfg, n_jobs=self.n_jobs,
        )
        self.meta_ = dataset.meta
        self.dataset_ = dataset
        self.pool_size_ = len(pool)
        self.front_ = result.front
        self.sweep_result_ = result
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "front_")
        columns = self._columns_for(X)
        if len(self.front_) == 0:
            return np.zeros((columns.shape[1], 0), dtype=np.int64)
        return np.column_stack(
            [_membership(p.ruleset, columns) for p in self.front_]
        )

    def fit_transform(self, X, tau):
        return self.fit(X, tau).transform(X)

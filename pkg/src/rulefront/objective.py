"""Objective functions and feasibility checks.

The multiplicative objective trades off subgroup size against subgroup
effect size::

    F(A) = (supp(A) / N) ** alpha * effect_term(A)

with ``alpha >= 0`` controlling the weight on subgroup size. Two effect-term
conventions are supported:

* ``normalized-mean`` (default): ``(mean tau over A - tau_min) / (tau_max -
  tau_min)``, a pure effect measure scaled into [0, 1].
* ``paper-sum``: ``(sum tau over A - tau_min) / tau_max``. This variant sums
  rather than averages, so it grows with coverage and requires a positive
  ``tau_max``; it is retained behind a flag for fidelity experiments.

A linear scalarization ``w * support_rate + (1 - w) * effect_term`` is
provided as the comparison baseline; its level curves are straight lines, so
it cannot reach interior points of convex fronts.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DegenerateInputError
from .model import Dataset, RuleSet, ruleset_mask

MULTIPLICATIVE = "multiplicative"
LINEAR = "linear"
NORMALIZED_MEAN = "normalized-mean"
PAPER_SUM = "paper-sum"


@dataclass(frozen=True)
class ObjectiveConfig:
    alpha: float = 1.0
    kind: str = MULTIPLICATIVE
    linear_weight: float = 0.5
    effect_term_mode: str = NORMALIZED_MEAN

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError(f"alpha must be nonnegative, got {self.alpha}")
        if self.kind not in (MULTIPLICATIVE, LINEAR):
            raise ConfigError(f"unknown objective kind {self.kind!r}")
        if not 0.0 <= self.linear_weight <= 1.0:
            raise ConfigError(
                f"linear_weight must lie in [0, 1], got {self.linear_weight}"
            )
        if self.effect_term_mode not in (NORMALIZED_MEAN, PAPER_SUM):
            raise ConfigError(
                f"unknown effect term mode {self.effect_term_mode!r}"
            )

    def with_alpha(self, alpha: float) -> "ObjectiveConfig":
        return replace(self, alpha=float(alpha))

    def with_linear_weight(self, w: float) -> "ObjectiveConfig":
        return replace(self, linear_weight=float(w))


@dataclass(frozen=True)
class Constraints:
    """Interpretability constraints: per-rule length cap and total
    complexity cap, plus an optional cap on the number of rules."""

    l_max: int = 3
    c_max: int = 9
    n_rules_cap: int | None = None

    def __post_init__(self):
        if self.l_max < 1:
            raise ConfigError(f"l_max must be >= 1, got {self.l_max}")
        if self.c_max < self.l_max:
            raise ConfigError(
                f"c_max ({self.c_max}) must be >= l_max ({self.l_max})"
            )
        if self.n_rules_cap is not None and self.n_rules_cap < 1:
            raise ConfigError("n_rules_cap must be >= 1 when set")


class ObjectiveEvaluator:
    """Precomputed-constant evaluator; the annealer's hot path feeds it raw
    (popcount, tau-sum) pairs instead of RuleSet objects."""

    __slots__ = ("n", "tau_min", "tau_max", "cfg", "_span")

    def __init__(self, data: Dataset, cfg: ObjectiveConfig):
        self.n = data.n
        self.tau_min = data.tau_min
        self.tau_max = data.tau_max
        self.cfg = cfg
        self._span = data.tau_max - data.tau_min
        if self._span <= 0:
            raise DegenerateInputError("constant effect estimates")
        if cfg.effect_term_mode == PAPER_SUM and data.tau_max <= 0:
            raise DegenerateInputError(
                "paper-sum effect term requires a positive maximum effect estimate"
            )

    def effect_term(self, supp: float, tau_sum: float) -> float:
        if supp == 0:
            return 0.0
        if self.cfg.effect_term_mode == NORMALIZED_MEAN:
            return (tau_sum / supp - self.tau_min) / self._span
        return (tau_sum - self.tau_min) / self.tau_max

    def value_from_stats(self, supp: float, tau_sum: float) -> float:
        if supp == 0:
            return 0.0
        frac = supp / self.n
        term = self.effect_term(supp, tau_sum)
        if self.cfg.kind == LINEAR:
            w = self.cfg.linear_weight
            return w * frac + (1.0 - w) * term
        return frac**self.cfg.alpha * term

    def batch_values(self, supp: np.ndarray, tau_sum: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`value_from_stats` over candidate arrays."""
        supp = np.asarray(supp, dtype=np.float64)
        tau_sum = np.asarray(tau_sum, dtype=np.float64)
        nonempty = supp > 0
        safe = np.where(nonempty, supp, 1.0)
        if self.cfg.effect_term_mode == NORMALIZED_MEAN:
            term = (tau_sum / safe - self.tau_min) / self._span
        else:
            term = (tau_sum - self.tau_min) / self.tau_max
        frac = supp / self.n
        if self.cfg.kind == LINEAR:
            w = self.cfg.linear_weight
            out = w * frac + (1.0 - w) * term
        else:
            out = frac**self.cfg.alpha * term
        return np.where(nonempty, out, 0.0)

    def value_of_mask(self, mask: np.ndarray, data: Dataset) -> float:
        supp = int(mask.sum())
        tau_sum = float(data.tau[mask].sum()) if supp else 0.0
        return self.value_from_stats(supp, tau_sum)


def evaluate(rs: RuleSet, data: Dataset, cfg: ObjectiveConfig) -> float:
    """Objective value of a rule set; dispatches on ``cfg.kind``.

    Empty coverage scores 0. Raises :class:`DegenerateInputError` for
    constant effect estimates (caught earlier at dataset construction) or a
    non-positive ``tau_max`` in ``paper-sum`` mode.
    """
    ev = ObjectiveEvaluator(data, cfg)
    return ev.value_of_mask(ruleset_mask(rs, data), data)


def evaluate_linear(rs: RuleSet, data: Dataset, cfg: ObjectiveConfig) -> float:
    """Linear-scalarization baseline ``w * support_rate + (1-w) * effect``."""
    if cfg.kind != LINEAR:
        cfg = replace(cfg, kind=LINEAR)
    return evaluate(rs, data, cfg)


def is_feasible(rs: RuleSet, c: Constraints) -> bool:
    """True iff every rule length <= l_max, complexity <= c_max, at least one
    rule, and (when configured) the rule count cap holds.

    Structural invariants (no duplicate or redundant-superset rules) are
    enforced by RuleSet construction itself.
    """
    if rs.n_rules < 1:
        return False
    if c.n_rules_cap is not None and rs.n_rules > c.n_rules_cap:
        return False
    if rs.complexity > c.c_max:
        return False
    return all(r.length <= c.l_max for r in rs.rules)

"""Hyperparameter sweeps and Pareto-front reduction.

Sweeping the size-weight hyperparameter (``alpha`` for the multiplicative
objective, the linear weight for the baseline) produces one best rule set
per grid value; the Pareto filter then drops dominated points and collapses
duplicates, keyed on the coverage fingerprint rather than rule-set syntax:
syntactically different rule sets covering the same observations are the
same subgroup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from joblib import Parallel, delayed

from .anneal import AnnealerConfig, ChainResult, run_restarts
from .errors import SearchError
from .mining import RulePool
from .model import Dataset, RuleSet, coverage_of_ruleset
from .objective import LINEAR, Constraints, ObjectiveConfig, evaluate

DEFAULT_ALPHA_GRID = (0.0, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0)
DEFAULT_WEIGHT_GRID = tuple(round(0.1 * i, 2) for i in range(11))


@dataclass(frozen=True)
class FrontierPoint:
    """One candidate frontier solution on the search split.

    ``alpha`` holds the grid value that produced the point (the linear
    weight when the sweep ran the linear objective); it is None for points
    produced by exhaustive enumeration, where no grid value applies.
    """

    ruleset: RuleSet
    support_rate: float
    effect: float
    fingerprint: str
    alpha: float | None = None
    objective: float | None = None

    @property
    def complexity(self) -> int:
        return self.ruleset.complexity

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "rules": str(self.ruleset),
            "support_rate": self.support_rate,
            "effect": self.effect,
            "objective": self.objective,
            "complexity": self.complexity,
        }


@dataclass(frozen=True)
class Front:
    """Dominance-free points sorted by support rate ascending; effects are
    then strictly decreasing."""

    points: tuple[FrontierPoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def fingerprints(self) -> set[str]:
        return {p.fingerprint for p in self.points}

    def to_dicts(self) -> list[dict]:
        return [p.to_dict() for p in self.points]


def point_from_ruleset(
    rs: RuleSet,
    data: Dataset,
    objective_cfg: ObjectiveConfig | None = None,
    alpha: float | None = None,
) -> FrontierPoint:
    """Evaluate support/effect/objective of a rule set from scratch."""
    mask = coverage_of_ruleset(rs, data)
    if mask.popcount == 0:
        raise SearchError(f"rule set covers nothing: {rs}")
    effect = float(data.tau[mask.bits].mean())
    objective = (
        None if objective_cfg is None else evaluate(rs, data, objective_cfg)
    )
    return FrontierPoint(
        ruleset=rs,
        support_rate=mask.popcount / data.n,
        effect=effect,
        fingerprint=mask.fingerprint(),
        alpha=alpha,
        objective=objective,
    )


def _dedup_key(p: FrontierPoint):
    return (
        math.inf if p.alpha is None else p.alpha,
        p.complexity,
        p.ruleset.key,
    )


def pareto_filter(points) -> Front:
    """Reduce points to a Pareto front in (support_rate, effect).

    A point is dropped when another point is at least as good in both
    coordinates and strictly better in one. Coverage-identical points keep
    the lowest-alpha representative; (support, effect)-identical but
    coverage-distinct points keep the lowest-complexity rule set, canonical
    order breaking remaining ties. Output is sorted by support ascending.
    """
    points = list(points)
    # Coverage dedup first: identical coverage implies identical metrics.
    by_cov: dict[str, FrontierPoint] = {}
    for p in points:
        cur = by_cov.get(p.fingerprint)
        if cur is None or _dedup_key(p) < _dedup_key(cur):
            by_cov[p.fingerprint] = p
    deduped = list(by_cov.values())

    survivors = []
    for p in deduped:
        dominated = False
        for q in deduped:
            if q is p:
                continue
            if (
                q.support_rate >= p.support_rate
                and q.effect >= p.effect
                and (q.support_rate > p.support_rate or q.effect > p.effect)
            ):
                dominated = True
                break
        if not dominated:
            survivors.append(p)

    # Equal (support, effect) with distinct coverage: keep one.
    by_metrics: dict[tuple[float, float], FrontierPoint] = {}
    for p in survivors:
        key = (p.support_rate, p.effect)
        cur = by_metrics.get(key)
        if cur is None or _dedup_key(p) < _dedup_key(cur):
            by_metrics[key] = p
    final = sorted(by_metrics.values(), key=lambda p: p.support_rate)
    return Front(points=tuple(final))


@dataclass(frozen=True)
class SweepResult:
    front: Front
    per_alpha: tuple["AlphaResult", ...]


@dataclass(frozen=True)
class AlphaResult:
    alpha: float
    result: ChainResult | None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def _config_for(objective_cfg: ObjectiveConfig, value: float) -> ObjectiveConfig:
    if objective_cfg.kind == LINEAR:
        return objective_cfg.with_linear_weight(value)
    return objective_cfg.with_alpha(value)


def _run_one(data, pool, cfg, constraints, objective_cfg, value, base_seed):
    try:
        best, _ = run_restarts(
            data, pool, replace(cfg, seed=base_seed), constraints,
            _config_for(objective_cfg, value),
        )
        return AlphaResult(alpha=value, result=best)
    except Exception as exc:  # noqa: BLE001 - per-alpha isolation is the contract
        return AlphaResult(alpha=value, result=None, error=str(exc))


def sweep(
    data: Dataset,
    pool: RulePool,
    grid,
    cfg: AnnealerConfig,
    constraints: Constraints,
    objective_cfg: ObjectiveConfig,
    n_jobs: int = 1,
) -> SweepResult:
    """Run the annealer (with restarts) at every grid value and reduce the
    best rule sets to a Pareto front.

    Grid values bind to the active scalarization's hyperparameter. Per-value
    failures are recorded without aborting the sweep; an all-failed sweep
    raises :class:`SearchError`. Chains are seeded ``seed + 10000 * index +
    restart`` so results do not depend on scheduling.
    """
    grid = list(grid)
    if not grid:
        raise SearchError("sweep grid is empty")
    if any(v < 0 for v in grid):
        raise SearchError("sweep grid values must be nonnegative")
    jobs = [
        (value, cfg.seed + 10_000 * i) for i, value in enumerate(grid)
    ]
    if n_jobs == 1:
        raw = [
            _run_one(data, pool, cfg, constraints, objective_cfg, v, s)
            for v, s in jobs
        ]
    else:
        raw = Parallel(n_jobs=n_jobs)(
            delayed(_run_one)(data, pool, cfg, constraints, objective_cfg, v, s)
            for v, s in jobs
        )
    if all(r.failed for r in raw):
        raise SearchError(
            "every sweep value failed: " + "; ".join(r.error or "" for r in raw)
        )
    points = [
        point_from_ruleset(
            r.result.ruleset,
            data,
            _config_for(objective_cfg, r.alpha),
            alpha=r.alpha,
        )
        for r in raw
        if not r.failed
    ]
    return SweepResult(front=pareto_filter(points), per_alpha=tuple(raw))

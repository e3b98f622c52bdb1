"""Exact brute-force references for small instances.

Enumerates every feasible rule set over a pool (within an explicit budget),
yielding the true Pareto front and exact objective maximizers. No pruning
cleverness: this module exists so that search results can be checked against
ground truth, and its values are computed through the same exact float64
path the annealer uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BudgetExceededError, ConfigError
from .frontier import Front, FrontierPoint, pareto_filter
from .mining import RulePool
from .model import CoverageMask, Dataset, RuleSet
from .objective import Constraints, ObjectiveConfig, ObjectiveEvaluator


@dataclass(frozen=True)
class EnumerationBudget:
    """Hard limits that keep exhaustive enumeration tractable."""

    max_pool: int = 64
    max_rules_per_set: int = 6
    max_complexity: int | None = None
    max_sets: int = 5_000_000

    def __post_init__(self):
        if self.max_pool < 1 or self.max_rules_per_set < 1 or self.max_sets < 1:
            raise ConfigError("enumeration budget fields must be positive")


def _combination_bound(n_rules: int, max_k: int) -> int:
    return sum(math.comb(n_rules, k) for k in range(1, max_k + 1))


def _check_budget(pool: RulePool, constraints: Constraints, budget: EnumerationBudget):
    if len(pool) > budget.max_pool:
        raise BudgetExceededError(
            f"pool of {len(pool)} rules exceeds budget max_pool={budget.max_pool}"
        )
    c_max = constraints.c_max
    if budget.max_complexity is not None:
        c_max = min(c_max, budget.max_complexity)
    max_k = min(budget.max_rules_per_set, c_max, len(pool))
    if constraints.n_rules_cap is not None:
        max_k = min(max_k, constraints.n_rules_cap)
    bound = _combination_bound(len(pool), max_k)
    if bound > budget.max_sets:
        raise BudgetExceededError(
            f"combinatorial bound {bound} rule sets exceeds budget "
            f"max_sets={budget.max_sets}"
        )
    return c_max, max_k


def _iter_index_sets(pool, constraints, budget):
    """Yield (indices, coverage mask) for every feasible rule set, each
    exactly once. Masks are built incrementally from the pool caches."""
    c_max, max_k = _check_budget(pool, constraints, budget)
    usable = [
        i for i in range(len(pool)) if pool.rules[i].length <= constraints.l_max
    ]
    keysets = [frozenset(pool.rules[i].key) for i in range(len(pool))]
    lengths = [pool.rules[i].length for i in range(len(pool))]

    def extend(chosen, complexity, mask, pos):
        for j_pos in range(pos, len(usable)):
            j = usable[j_pos]
            new_complexity = complexity + lengths[j]
            if new_complexity > c_max:
                continue
            kj = keysets[j]
            if any(kj <= keysets[i] or keysets[i] <= kj for i in chosen):
                continue
            new_mask = pool.masks[j] if mask is None else mask | pool.masks[j]
            new_chosen = chosen + [j]
            yield new_chosen, new_mask
            if len(new_chosen) < max_k:
                yield from extend(new_chosen, new_complexity, new_mask, j_pos + 1)

    yield from extend([], 0, None, 0)


def enumerate_rulesets(
    pool: RulePool,
    constraints: Constraints,
    budget: EnumerationBudget,
):
    """Every feasible rule set over the pool, exactly once, as RuleSets."""
    for chosen, _ in _iter_index_sets(pool, constraints, budget):
        yield RuleSet(pool.rules[i] for i in chosen)


def exact_front(
    pool: RulePool,
    data: Dataset,
    constraints: Constraints,
    budget: EnumerationBudget,
) -> Front:
    """True (support, effect) Pareto front by exhaustive dominance checking,
    deduplicated by coverage. Rule sets with empty coverage are skipped
    (their effect is undefined)."""
    best_by_cov: dict[str, FrontierPoint] = {}
    for chosen, mask in _iter_index_sets(pool, constraints, budget):
        cm = CoverageMask(mask)
        if cm.popcount == 0:
            continue
        fp = cm.fingerprint()
        rs = RuleSet(pool.rules[i] for i in chosen)
        point = FrontierPoint(
            ruleset=rs,
            support_rate=cm.popcount / data.n,
            effect=float(data.tau[cm.bits].mean()),
            fingerprint=fp,
            alpha=None,
            objective=None,
        )
        cur = best_by_cov.get(fp)
        if (
            cur is None
            or (point.complexity, point.ruleset.key)
            < (cur.complexity, cur.ruleset.key)
        ):
            best_by_cov[fp] = point
    return pareto_filter(best_by_cov.values())


def exact_argmax(
    pool: RulePool,
    data: Dataset,
    constraints: Constraints,
    objective_cfg: ObjectiveConfig,
    budget: EnumerationBudget,
) -> tuple[RuleSet, float]:
    """Global maximizer of the configured objective over all feasible rule
    sets; exact ties prefer the canonically smaller rule set."""
    ev = ObjectiveEvaluator(data, objective_cfg)
    tau = data.tau
    best_val = -math.inf
    best_key = None
    best_chosen = None
    for chosen, mask in _iter_index_sets(pool, constraints, budget):
        supp = int(mask.sum())
        tau_sum = float(tau[mask].sum()) if supp else 0.0
        val = ev.value_from_stats(supp, tau_sum)
        key = tuple(sorted(pool.rules[i].key for i in chosen))
        if val > best_val or (val == best_val and key < best_key):
            best_val = val
            best_key = key
            best_chosen = chosen
    if best_chosen is None:
        raise BudgetExceededError("no feasible rule sets to enumerate")
    return RuleSet(pool.rules[i] for i in best_chosen), best_val

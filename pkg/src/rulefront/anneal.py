"""Simulated-annealing search over rule sets.

Each iteration draws a neighborhood (general: change one rule; fine-grained:
change one condition inside one rule), picks an action subject to the
feasibility guards, selects the concrete rule/condition epsilon-greedily
(uniform with probability ``q``, otherwise objective-maximizing with
canonical tie-breaking), and accepts the proposal with the Metropolis
probability ``min(1, exp((F(proposal) - F(current)) / T_t))`` under the
geometric schedule ``T_t = T0 * eta^t``.

Proposals are always feasible: choices that would violate the constraints or
the structural rule-set invariants are excluded from the choice sets, and an
empty choice set degenerates into a NOOP resubmission of the current state.

Performance notes: candidate scans are vectorized over cached coverage masks
(float32 is good enough to pick a candidate), but every objective value that
is compared, accepted, or reported is recomputed exactly in float64 from the
candidate's own coverage mask, so chain results are bit-comparable with the
exhaustive oracle.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .errors import ConfigError, EmptyPoolError, SearchError
from .mining import RulePool
from .model import Dataset, Rule, RuleSet
from .objective import Constraints, ObjectiveConfig, ObjectiveEvaluator, is_feasible

T0_FLOOR = 1e-12

ADD = "ADD"
CUT = "CUT"
REPLACE = "REPLACE"
ADD_COND = "ADD_COND"
CUT_COND = "CUT_COND"
REPLACE_COND = "REPLACE_COND"
NOOP = "NOOP"

GENERAL = "general"
FINE = "fine"


@dataclass(frozen=True)
class AnnealerConfig:
    """Hyperparameters of the search.

    ``eta=None`` derives the cooling factor from the iteration count so the
    final temperature is 1e-3 of T0. ``q`` is the exploration probability of
    the epsilon-greedy neighbor selection.
    """

    n_iter: int = 5000
    q: float = 0.1
    fg_scale: float = 10.0
    fg_switch: float = 0.5
    eta: float | None = None
    t0_scale: float = 1.5
    t0_probes: int = 100
    seed: int = 0
    restarts: int = 5

    def __post_init__(self):
        if self.n_iter < 0:
            raise ConfigError("n_iter must be nonnegative")
        if not 0.0 <= self.q <= 1.0:
            raise ConfigError(f"q must lie in [0, 1], got {self.q}")
        if not 0.0 < self.fg_switch < 1.0:
            raise ConfigError(f"fg_switch must lie in (0, 1), got {self.fg_switch}")
        if self.eta is not None and not 0.0 < self.eta <= 1.0:
            raise ConfigError(f"eta must lie in (0, 1], got {self.eta}")
        if self.t0_scale <= 0:
            raise ConfigError("t0_scale must be positive")
        if self.t0_probes < 1:
            raise ConfigError("t0_probes must be >= 1")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")

    def effective_eta(self) -> float:
        if self.eta is not None:
            return self.eta
        if self.n_iter == 0:
            return 1.0
        return (1e-3) ** (1.0 / self.n_iter)


@dataclass(frozen=True)
class TraceRecord:
    """One search step. ``n_rules``/``complexity`` describe the state the
    proposal was made from, and ``rule_length`` is the length of the rule the
    fine-grained branch sampled (None for the general branch); together they
    let tests audit the action guards."""

    iteration: int
    action: str
    neighborhood: str
    accepted: bool
    objective: float
    temperature: float
    n_rules: int
    complexity: int
    rule_length: int | None = None


@dataclass(frozen=True)
class ChainResult:
    ruleset: RuleSet
    objective: float
    t0: float
    seed: int
    trace: tuple[TraceRecord, ...] | None = None


def fg_probability(t: int, cfg: AnnealerConfig) -> float:
    """Probability of drawing from the fine-grained neighborhood at
    iteration ``t``: a logistic ramp crossing 0.5 at ``fg_switch * n_iter``."""
    if not 0 <= t <= max(cfg.n_iter, 1):
        raise ConfigError(f"iteration {t} outside [0, n_iter]")
    n = max(cfg.n_iter, 1)
    x = -cfg.fg_scale * (t - cfg.fg_switch * n) / n
    if x > 700.0:
        return 0.0
    return 1.0 / (1.0 + math.exp(x))


def acceptance_probability(
    f_current: float, f_proposal: float, temperature: float
) -> float:
    """Metropolis acceptance probability; exactly 1 for any improvement."""
    if temperature <= 0:
        raise ConfigError("temperature must be positive")
    if f_proposal >= f_current:
        return 1.0
    return math.exp((f_proposal - f_current) / temperature)


class _Entry:
    """A rule inside the chain state with its cached coverage mask."""

    __slots__ = ("key", "keyset", "varset", "mask")

    def __init__(self, key, varset, mask):
        self.key = key
        self.keyset = frozenset(key)
        self.varset = varset
        self.mask = mask


class _Proposal:
    __slots__ = ("entries", "mask", "supp", "tau_sum", "objective", "action")

    def __init__(self, entries, mask, supp, tau_sum, objective, action):
        self.entries = entries
        self.mask = mask
        self.supp = supp
        self.tau_sum = tau_sum
        self.objective = objective
        self.action = action


class AnnealingChain:
    """One sequential annealing chain over shared immutable data and pool.

    Exposed for tests and diagnostics; normal callers use :func:`run_chain`.
    """

    def __init__(
        self,
        data: Dataset,
        pool: RulePool,
        cfg: AnnealerConfig,
        constraints: Constraints,
        objective_cfg: ObjectiveConfig,
        seed: int | None = None,
    ):
        if len(pool) == 0:
            raise EmptyPoolError("annealer needs a nonempty rule pool")
        self.data = data
        self.pool = pool
        self.cfg = cfg
        self.constraints = constraints
        self.ev = ObjectiveEvaluator(data, objective_cfg)
        self.seed = cfg.seed if seed is None else seed
        self.rng = random.Random(self.seed)
        self.tau = data.tau
        self.tau32 = data.tau.astype(np.float32)

        self.pool_keys = [r.key for r in pool.rules]
        self.pool_keysets = [frozenset(k) for k in self.pool_keys]
        self.pool_varsets = [r.variable_ids for r in pool.rules]
        self.pool_lengths = np.asarray([r.length for r in pool.rules])
        order = sorted(range(len(pool)), key=lambda i: self.pool_keys[i])
        self.pool_canon = np.empty(len(pool), dtype=np.int64)
        self.pool_canon[order] = np.arange(len(pool))
        self.pool32 = pool.masks.astype(np.float32)
        self.pool_supp = pool.supports.astype(np.float64)
        self.pool_sums32 = self.pool32 @ self.tau32

        self.col_var = np.asarray([m.variable_id for m in data.meta])
        self._col_var_list = [int(v) for v in self.col_var]
        self._all_cols = np.arange(data.n_columns)
        self._zeros = np.zeros(data.n, dtype=bool)
        self._zeros.setflags(write=False)

        self.entries: list[_Entry] = []
        self.cur_mask = np.zeros(data.n, dtype=bool)
        self.cur_supp = 0
        self.cur_sum = 0.0
        self.cur_obj = 0.0

    # -- state management -------------------------------------------------

    def _exact_value(self, mask) -> tuple[int, float, float]:
        supp = int(mask.sum())
        tau_sum = float(self.tau[mask].sum()) if supp else 0.0
        return supp, tau_sum, self.ev.value_from_stats(supp, tau_sum)

    def _entry_from_pool(self, k: int) -> _Entry:
        return _Entry(self.pool_keys[k], self.pool_varsets[k], self.pool.masks[k])

    def _entry_from_key(self, key: tuple[int, ...], mask=None) -> _Entry:
        cols = self.data.columns
        if mask is None:
            mask = cols[key[0]].copy()
            for ref in key[1:]:
                mask &= cols[ref]
        varset = frozenset(int(self.col_var[ref]) for ref in key)
        return _Entry(key, varset, mask)

    def _adopt(self, entries: list[_Entry]):
        self.entries = sorted(entries, key=lambda e: e.key)
        mask = np.zeros(self.data.n, dtype=bool)
        for e in self.entries:
            mask |= e.mask
        self.cur_mask = mask
        self.cur_supp, self.cur_sum, self.cur_obj = self._exact_value(mask)

    def set_state(self, rs: RuleSet):
        """Force the chain into a given state (tests and calibration)."""
        if not is_feasible(rs, self.constraints):
            raise ConfigError("cannot set an infeasible search state")
        self._adopt([self._entry_from_key(r.key) for r in rs.rules])

    def state_ruleset(self) -> RuleSet:
        return RuleSet(
            Rule(self.data.condition(ref) for ref in e.key) for e in self.entries
        )

    @property
    def complexity(self) -> int:
        return sum(len(e.key) for e in self.entries)

    # -- candidate scans ---------------------------------------------------

    def _noop(self) -> _Proposal:
        return _Proposal(
            self.entries, self.cur_mask, self.cur_supp, self.cur_sum,
            self.cur_obj, NOOP,
        )

    def _finish(self, entries, new_mask, action) -> _Proposal:
        supp, tau_sum, obj = self._exact_value(new_mask)
        return _Proposal(entries, new_mask, supp, tau_sum, obj, action)

    def _structurally_ok(self, key, keyset, others) -> bool:
        for e in others:
            if keyset <= e.keyset or e.keyset <= keyset:
                return False
        return True

    def _pool_add_scores(self, base_mask, base_supp, base_sum):
        """Approximate objective of adding each pool rule to ``base``."""
        m32 = base_mask.astype(np.float32)
        w = np.empty((self.data.n, 2), dtype=np.float32)
        w[:, 0] = m32
        w[:, 1] = m32 * self.tau32
        overlap = self.pool32 @ w
        supp = base_supp + self.pool_supp - overlap[:, 0].astype(np.float64)
        sums = base_sum + self.pool_sums32.astype(np.float64) - overlap[:, 1]
        return self.ev.batch_values(supp, sums)

    def _select_add(self, others, base_mask, base_supp, base_sum, budget, greedy):
        """Pick a pool rule to union onto ``others``; None when no valid
        choice exists. Greedy walks candidates in score-then-canonical order
        and takes the first structurally valid one."""
        elig = np.flatnonzero(self.pool_lengths <= budget)
        if elig.size == 0:
            return None
        if greedy:
            scores = self._pool_add_scores(base_mask, base_supp, base_sum)
            order = elig[np.lexsort((self.pool_canon[elig], -scores[elig]))]
            for k in order:
                k = int(k)
                if self._structurally_ok(
                    self.pool_keys[k], self.pool_keysets[k], others
                ):
                    return k
            return None
        valid = [
            int(k)
            for k in elig
            if self._structurally_ok(self.pool_keys[int(k)],
                                     self.pool_keysets[int(k)], others)
        ]
        if not valid:
            return None
        return valid[self.rng.randrange(len(valid))]

    def _loo_masks(self, entries):
        """Leave-one-out OR masks for the given entries."""
        r = len(entries)
        if r == 1:
            return [self._zeros]
        if r == 2:
            return [entries[1].mask, entries[0].mask]
        n = self.data.n
        prefix = np.zeros((r + 1, n), dtype=bool)
        suffix = np.zeros((r + 1, n), dtype=bool)
        for i in range(r):
            np.logical_or(prefix[i], entries[i].mask, out=prefix[i + 1])
        for i in range(r - 1, -1, -1):
            np.logical_or(suffix[i + 1], entries[i].mask, out=suffix[i])
        return [prefix[i] | suffix[i + 1] for i in range(r)]

    def _batch_choose(self, masks, greedy, valid=None):
        """Index of the chosen candidate among full-coverage masks.

        Greedy: exact float64 scoring, first maximum wins (candidates are
        supplied in canonical order). Uniform: random valid index.
        """
        if valid is None:
            valid = range(len(masks))
        valid = list(valid)
        if not valid:
            return None
        if not greedy:
            return valid[self.rng.randrange(len(valid))]
        best_i, best_v = None, -math.inf
        for i in valid:
            m = masks[i]
            supp = int(m.sum())
            tau_sum = float(self.tau[m].sum()) if supp else 0.0
            v = self.ev.value_from_stats(supp, tau_sum)
            if v > best_v:
                best_i, best_v = i, v
        return best_i

    # -- actions -----------------------------------------------------------

    def _action_add(self, greedy) -> _Proposal:
        budget = self.constraints.c_max - self.complexity
        cap = self.constraints.n_rules_cap
        if cap is not None and len(self.entries) >= cap:
            return self._noop()
        k = self._select_add(
            self.entries, self.cur_mask, self.cur_supp, self.cur_sum,
            budget, greedy,
        )
        if k is None:
            return self._noop()
        entry = self._entry_from_pool(k)
        new_mask = self.cur_mask | entry.mask
        return self._finish(self.entries + [entry], new_mask, ADD)

    def _cut_choice(self, greedy):
        """Epsilon-greedy removal choice shared by CUT and REPLACE."""
        loo = self._loo_masks(self.entries)
        idx = self._batch_choose(loo, greedy)
        return idx, loo[idx]

    def _action_replace(self, greedy_cut, greedy_add) -> _Proposal:
        idx, rest_mask = self._cut_choice(greedy_cut)
        removed = self.entries[idx]
        others = [e for j, e in enumerate(self.entries) if j != idx]
        supp, tau_sum, _ = self._exact_value(rest_mask)
        budget = self.constraints.c_max - (self.complexity - len(removed.key))
        k = self._select_add(others, rest_mask, supp, tau_sum, budget, greedy_add)
        if k is None:
            return self._noop()
        entry = self._entry_from_pool(k)
        return self._finish(others + [entry], rest_mask | entry.mask, REPLACE)

    def _addable_columns(self, varset):
        cv = self._col_var_list
        return np.asarray(
            [j for j in range(len(cv)) if cv[j] not in varset], dtype=np.intp
        )

    def _grow_rule(self, base_key, base_mask, others, rest_mask, greedy, label):
        """Shared ADD_COND tail: extend the rule ``base_key``/``base_mask``
        by one condition and splice it back into the rule set."""
        varset = frozenset(int(self.col_var[ref]) for ref in base_key)
        cand = self._addable_columns(varset)
        if cand.size == 0:
            return self._noop()
        if base_mask is None:
            rule_masks = self.data.columns[cand]
        else:
            rule_masks = self.data.columns[cand] & base_mask
        full = rule_masks | rest_mask

        def key_of(i):
            ref = int(cand[i])
            key = tuple(sorted(base_key + (ref,)))
            return key

        if greedy:
            supp = full.sum(axis=1).astype(np.float64)
            sums = full.astype(np.float32) @ self.tau32
            scores = self.ev.batch_values(supp, sums.astype(np.float64))
            order = np.lexsort((cand, -scores))
            chosen = None
            for i in order:
                key = key_of(int(i))
                if self._structurally_ok(key, frozenset(key), others):
                    chosen = int(i)
                    break
        else:
            valid = [
                i
                for i in range(cand.size)
                if self._structurally_ok(
                    (k := key_of(i)), frozenset(k), others
                )
            ]
            chosen = None if not valid else valid[self.rng.randrange(len(valid))]
        if chosen is None:
            return self._noop()
        key = key_of(chosen)
        entry = self._entry_from_key(key, mask=rule_masks[chosen].copy())
        return self._finish(others + [entry], full[chosen].copy(), label)

    def _shrunk_rules(self, entry):
        """All one-condition-removed variants of ``entry``: (key, mask)."""
        out = []
        for drop in range(len(entry.key)):
            key = entry.key[:drop] + entry.key[drop + 1 :]
            mask = None
            for ref in key:
                col = self.data.columns[ref]
                mask = col.copy() if mask is None else mask & col
            out.append((key, mask))
        return out

    def _action_add_cond(self, entry_idx, greedy) -> _Proposal:
        entry = self.entries[entry_idx]
        if self.complexity >= self.constraints.c_max:
            return self._noop()
        others = [e for j, e in enumerate(self.entries) if j != entry_idx]
        rest_mask = self._loo_masks(self.entries)[entry_idx]
        return self._grow_rule(
            entry.key, entry.mask, others, rest_mask, greedy, ADD_COND
        )

    def _action_cut_cond(self, entry_idx, greedy) -> _Proposal:
        entry = self.entries[entry_idx]
        others = [e for j, e in enumerate(self.entries) if j != entry_idx]
        rest_mask = self._loo_masks(self.entries)[entry_idx]
        variants = self._shrunk_rules(entry)
        # removing the only condition would empty the rule: not a valid cut
        valid = [
            i
            for i, (key, _) in enumerate(variants)
            if key and self._structurally_ok(key, frozenset(key), others)
        ]
        if not valid:
            return self._noop()
        full = [
            rest_mask | m if i in valid else None
            for i, (_, m) in enumerate(variants)
        ]
        idx = self._batch_choose(full, greedy, valid=valid)
        key, mask = variants[idx]
        entry = self._entry_from_key(key, mask=mask)
        return self._finish(others + [entry], rest_mask | mask, CUT_COND)

    def _action_replace_cond(self, entry_idx, greedy_cut, greedy_add) -> _Proposal:
        entry = self.entries[entry_idx]
        others = [e for j, e in enumerate(self.entries) if j != entry_idx]
        rest_mask = self._loo_masks(self.entries)[entry_idx]
        if len(entry.key) == 1:
            base_key, base_mask = (), None
        else:
            variants = self._shrunk_rules(entry)
            # Intermediate states are never proposed, so the cut half is not
            # structurally filtered; the add half enforces final validity.
            idx = self._batch_choose(
                [rest_mask | m for _, m in variants], greedy_cut
            )
            base_key, base_mask = variants[idx]
        return self._grow_rule(
            base_key, base_mask, others, rest_mask, greedy_add, REPLACE_COND
        )

    # -- proposal ----------------------------------------------------------

    def propose(self, t: int, q_override: float | None = None):
        """One neighbor proposal; returns (proposal, neighborhood label,
        sampled rule length or None)."""
        p_fg = fg_probability(t, self.cfg)
        q = self.cfg.q if q_override is None else q_override

        def coin():
            return not (self.rng.random() < q)

        if self.rng.random() < p_fg:
            idx = self.rng.randrange(len(self.entries))
            length = len(self.entries[idx].key)
            if length == self.constraints.l_max:
                action = CUT_COND if self.rng.random() < 0.5 else REPLACE_COND
            elif length == 1:
                action = ADD_COND if self.rng.random() < 0.5 else REPLACE_COND
            else:
                u = self.rng.random()
                action = ADD_COND if u < 1 / 3 else CUT_COND if u < 2 / 3 else REPLACE_COND
            if action == ADD_COND:
                proposal = self._action_add_cond(idx, coin())
            elif action == CUT_COND:
                proposal = self._action_cut_cond(idx, coin())
            else:
                proposal = self._action_replace_cond(idx, coin(), coin())
            return proposal, FINE, length

        if self.complexity == self.constraints.c_max:
            action = CUT if self.rng.random() < 0.5 else REPLACE
        elif len(self.entries) == 1:
            action = ADD if self.rng.random() < 0.5 else REPLACE
        else:
            u = self.rng.random()
            action = ADD if u < 1 / 3 else CUT if u < 2 / 3 else REPLACE
        if action == ADD:
            proposal = self._action_add(coin())
        elif action == CUT:
            if len(self.entries) <= 1:
                proposal = self._noop()
            else:
                idx, loo = self._cut_choice(coin())
                entries = [e for j, e in enumerate(self.entries) if j != idx]
                proposal = self._finish(entries, loo, CUT)
        else:
            proposal = self._action_replace(coin(), coin())
        return proposal, GENERAL, None

    # -- calibration and run ----------------------------------------------

    def initialize(self):
        """Draw A0: a single rule sampled uniformly from the pool."""
        k = self.rng.randrange(len(self.pool))
        self._adopt([self._entry_from_pool(k)])

    def calibrate_t0(self) -> float:
        """Probe random proposals from the start state (never accepting) and
        set T0 to ``t0_scale *`` the mean absolute objective change."""
        deltas = []
        for _ in range(self.cfg.t0_probes):
            proposal, _, _ = self.propose(0, q_override=1.0)
            deltas.append(abs(proposal.objective - self.cur_obj))
        mean = sum(deltas) / len(deltas)
        return max(self.cfg.t0_scale * mean, T0_FLOOR)

    def _assert_feasible(self, proposal: _Proposal):
        comp = sum(len(e.key) for e in proposal.entries)
        if comp > self.constraints.c_max or not proposal.entries:
            raise SearchError(
                f"proposal violates constraints (complexity {comp})"
            )
        for e in proposal.entries:
            if len(e.key) > self.constraints.l_max:
                raise SearchError("proposal violates the rule length cap")

    def run(self, record_trace: bool = False) -> ChainResult:
        self.initialize()
        t0 = self.calibrate_t0()
        eta = self.cfg.effective_eta()
        best_entries = list(self.entries)
        best_obj = self.cur_obj
        trace: list[TraceRecord] | None = [] if record_trace else None
        temperature = t0
        for t in range(self.cfg.n_iter):
            n_rules_before = len(self.entries)
            complexity_before = self.complexity
            proposal, neighborhood, rule_length = self.propose(t)
            self._assert_feasible(proposal)
            pi = acceptance_probability(self.cur_obj, proposal.objective, temperature)
            accepted = self.rng.random() < pi
            if accepted and proposal.action != NOOP:
                self.entries = sorted(proposal.entries, key=lambda e: e.key)
                self.cur_mask = proposal.mask
                self.cur_supp = proposal.supp
                self.cur_sum = proposal.tau_sum
                self.cur_obj = proposal.objective
                if self.cur_obj > best_obj:
                    best_obj = self.cur_obj
                    best_entries = list(self.entries)
            if trace is not None:
                trace.append(
                    TraceRecord(
                        iteration=t,
                        action=proposal.action,
                        neighborhood=neighborhood,
                        accepted=bool(accepted),
                        objective=self.cur_obj,
                        temperature=temperature,
                        n_rules=n_rules_before,
                        complexity=complexity_before,
                        rule_length=rule_length,
                    )
                )
            temperature *= eta
        self._adopt(best_entries)
        ruleset = self.state_ruleset()
        if not is_feasible(ruleset, self.constraints):
            raise SearchError(f"returned rule set is infeasible: {ruleset}")
        return ChainResult(
            ruleset=ruleset,
            objective=best_obj,
            t0=t0,
            seed=self.seed,
            trace=None if trace is None else tuple(trace),
        )


def calibrate_t0(
    pool: RulePool,
    data: Dataset,
    cfg: AnnealerConfig,
    constraints: Constraints,
    objective_cfg: ObjectiveConfig,
    seed: int | None = None,
) -> float:
    """Standalone T0 calibration from a random feasible start."""
    chain = AnnealingChain(data, pool, cfg, constraints, objective_cfg, seed=seed)
    chain.initialize()
    return chain.calibrate_t0()


def run_chain(
    data: Dataset,
    pool: RulePool,
    cfg: AnnealerConfig,
    constraints: Constraints,
    objective_cfg: ObjectiveConfig,
    seed: int | None = None,
    record_trace: bool = False,
) -> ChainResult:
    """Run one annealing chain and return the best-ever feasible rule set
    (not the final state). Deterministic given the seed."""
    chain = AnnealingChain(data, pool, cfg, constraints, objective_cfg, seed=seed)
    return chain.run(record_trace=record_trace)


def run_restarts(
    data: Dataset,
    pool: RulePool,
    cfg: AnnealerConfig,
    constraints: Constraints,
    objective_cfg: ObjectiveConfig,
    n_jobs: int = 1,
    record_trace: bool = False,
) -> tuple[ChainResult, list[ChainResult]]:
    """Run ``cfg.restarts`` independent chains (seeded ``seed + index``) and
    return (best, all results). Ties keep the earliest chain."""
    seeds = [cfg.seed + i for i in range(cfg.restarts)]
    if n_jobs == 1 or cfg.restarts == 1:
        results = [
            run_chain(data, pool, cfg, constraints, objective_cfg,
                      seed=s, record_trace=record_trace)
            for s in seeds
        ]
    else:
        results = Parallel(n_jobs=n_jobs)(
            delayed(run_chain)(
                data, pool, cfg, constraints, objective_cfg,
                seed=s, record_trace=record_trace,
            )
            for s in seeds
        )
    best = max(results, key=lambda r: r.objective)
    return best, results

"""Condition construction and candidate-rule mining.

Raw tabular variables become binary condition columns:

* binary variables emit both polarities (``W=1``, ``W=0``);
* categorical variables emit one-hot and negation columns per level;
* ordered variables emit cumulative indicator pairs at quantile cut points
  (default q25/q50/q75), giving nested "below" columns and reverse-nested
  "above" columns.

The quantile cut for probability ``p`` is the ``ceil(p * n)``-th order
statistic; the below column is inclusive (``x <= cut``) and the above column
is its complement (``x > cut``). Candidate rules are then enumerated depth
first up to ``l_max`` conditions with exact anti-monotone support pruning,
and culled to a fixed pool size ranked by a single-rule objective.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError, EmptyPoolError
from .model import ColumnMeta, Dataset, Rule
from .objective import Constraints

BINARY = "binary"
CATEGORICAL = "categorical"
ORDINAL = "ordinal"

DEFAULT_QUANTILES = (0.25, 0.5, 0.75)

MINED = "mined"
INJECTED = "injected"


@dataclass(frozen=True)
class VariableSpec:
    kind: str
    quantiles: tuple[float, ...] = DEFAULT_QUANTILES

    def __post_init__(self):
        if self.kind not in (BINARY, CATEGORICAL, ORDINAL):
            raise ConfigError(f"unknown variable kind {self.kind!r}")
        if self.kind == ORDINAL:
            if not self.quantiles:
                raise ConfigError("ordinal variables need at least one quantile")
            for q in self.quantiles:
                if not 0.0 < q < 1.0:
                    raise ConfigError(f"quantile {q} outside (0, 1)")


@dataclass(frozen=True)
class DiscretizationSpec:
    """Per-variable condition scheme, in column order of the raw table."""

    variables: dict[str, VariableSpec] = field(default_factory=dict)

    @classmethod
    def infer(cls, frame: pd.DataFrame, columns=None) -> "DiscretizationSpec":
        """Heuristic spec: two distinct values -> binary, non-numeric ->
        categorical, otherwise ordinal with default quantiles."""
        out = {}
        for name in columns if columns is not None else frame.columns:
            col = frame[name]
            distinct = col.dropna().unique()
            if len(distinct) <= 2 and set(np.unique(distinct)) <= {0, 1}:
                out[name] = VariableSpec(BINARY)
            elif not pd.api.types.is_numeric_dtype(col):
                out[name] = VariableSpec(CATEGORICAL)
            else:
                out[name] = VariableSpec(ORDINAL)
        return cls(out)


def quantile_cut(values: np.ndarray, p: float) -> float:
    """Inclusive lower-quantile cut: the ``ceil(p * n)``-th order statistic."""
    srt = np.sort(np.asarray(values, dtype=np.float64))
    k = max(1, math.ceil(p * srt.shape[0]))
    return float(srt[k - 1])


def _quantile_label(p: float) -> str:
    return f"q{100 * p:g}"


def _variable_columns(name, vid, col, vspec):
    """Binary column masks + metadata for one raw variable; None when the
    variable is constant (dropped with a warning by the caller)."""
    values = col.to_numpy()
    if pd.isna(values).any():
        raise DataError(f"variable {name!r} contains missing values")
    distinct = pd.unique(values)
    if len(distinct) < 2:
        return None

    masks, metas = [], []

    def emit(mask, op, value, display):
        masks.append(mask)
        metas.append(ColumnMeta(name, vid, op, value, display))

    if vspec.kind == BINARY:
        try:
            numeric = values.astype(np.float64)
        except (TypeError, ValueError) as exc:
            raise DataError(
                f"binary variable {name!r} has non-numeric values"
            ) from exc
        if not set(np.unique(numeric)) <= {0.0, 1.0}:
            raise DataError(
                f"binary variable {name!r} has values outside {{0, 1}}"
            )
        emit(numeric == 1.0, "eq", 1, f"{name}=1")
        emit(numeric == 0.0, "eq", 0, f"{name}=0")
    elif vspec.kind == CATEGORICAL:
        for level in sorted(distinct, key=str):
            emit(values == level, "eq", level, f"{name}={level}")
            emit(values != level, "ne", level, f"{name}!={level}")
    else:
        try:
            numeric = values.astype(np.float64)
        except (TypeError, ValueError) as exc:
            raise DataError(
                f"ordinal variable {name!r} has non-numeric values"
            ) from exc
        if not np.all(np.isfinite(numeric)):
            raise DataError(f"ordinal variable {name!r} has non-finite values")
        for p in vspec.quantiles:
            cut = quantile_cut(numeric, p)
            label = _quantile_label(p)
            emit(numeric <= cut, "le", cut, f"{name}<={label}")
            emit(numeric > cut, "gt", cut, f"{name}>{label}")

    # Duplicate cut points (or two-level categoricals) can repeat a bit
    # pattern within the variable; keep the first occurrence.
    seen, keep = set(), []
    for i, m in enumerate(masks):
        sig = m.tobytes()
        if sig not in seen:
            seen.add(sig)
            keep.append(i)
    return [masks[i] for i in keep], [metas[i] for i in keep]


def build_columns(
    frame: pd.DataFrame, spec: DiscretizationSpec
) -> tuple[np.ndarray, list[ColumnMeta]]:
    """Learn condition columns (including quantile cuts) from a raw table."""
    all_masks: list[np.ndarray] = []
    all_meta: list[ColumnMeta] = []
    vid = 0
    for name, vspec in spec.variables.items():
        if name not in frame.columns:
            raise DataError(f"declared variable {name!r} missing from table")
        built = _variable_columns(name, vid, frame[name], vspec)
        if built is None:
            warnings.warn(
                f"variable {name!r} is constant and was dropped", stacklevel=2
            )
            continue
        masks, metas = built
        all_masks.extend(masks)
        all_meta.extend(metas)
        vid += 1
    if not all_masks:
        raise DataError("no usable condition columns after discretization")
    return np.asarray(all_masks, dtype=bool), all_meta


def apply_columns(frame: pd.DataFrame, meta) -> np.ndarray:
    """Re-apply learned columns (fixed cuts/levels) to new rows."""
    n = len(frame)
    out = np.zeros((len(meta), n), dtype=bool)
    for i, m in enumerate(meta):
        if m.variable not in frame.columns:
            raise DataError(f"variable {m.variable!r} missing from table")
        values = frame[m.variable].to_numpy()
        if pd.isna(values).any():
            raise DataError(f"variable {m.variable!r} contains missing values")
        if m.op == "eq":
            if isinstance(m.value, (int, float)):
                out[i] = values.astype(np.float64) == float(m.value)
            else:
                out[i] = values == m.value
        elif m.op == "ne":
            out[i] = values != m.value
        elif m.op == "le":
            out[i] = values.astype(np.float64) <= float(m.value)
        elif m.op == "gt":
            out[i] = values.astype(np.float64) > float(m.value)
        else:  # pragma: no cover - ops are fixed at construction
            raise DataError(f"unknown column op {m.op!r}")
    return out


def discretize(
    frame: pd.DataFrame,
    spec: DiscretizationSpec,
    tau_column: str,
    outcome_column: str | None = None,
    treatment_column: str | None = None,
) -> Dataset:
    """Build a Dataset from a raw table: condition columns plus the effect
    estimates (and optional outcome/treatment vectors for inference)."""
    for col in filter(None, (tau_column, outcome_column, treatment_column)):
        if col not in frame.columns:
            raise DataError(f"declared column {col!r} missing from table")
    columns, meta = build_columns(frame, spec)
    return Dataset(
        columns=columns,
        tau=frame[tau_column].to_numpy(dtype=np.float64),
        meta=meta,
        y=None if outcome_column is None else frame[outcome_column].to_numpy(),
        d=None
        if treatment_column is None
        else frame[treatment_column].to_numpy(),
    )


class RulePool:
    """Candidate rules with cached coverage masks and effect-sum statistics.

    Immutable after construction; the annealer and the exhaustive oracle both
    evaluate rule sets as ORs of these cached masks.
    """

    __slots__ = ("rules", "masks", "supports", "tau_sums", "provenance")

    def __init__(self, rules, masks, tau, provenance=None):
        rules = tuple(rules)
        masks = np.ascontiguousarray(masks, dtype=bool)
        if masks.shape[0] != len(rules):
            raise ConfigError("one cached mask required per pool rule")
        keys = [r.key for r in rules]
        if len(set(keys)) != len(keys):
            raise ConfigError("duplicate rules in pool")
        masks.setflags(write=False)
        self.rules = rules
        self.masks = masks
        self.supports = masks.sum(axis=1).astype(np.int64)
        self.tau_sums = masks @ np.asarray(tau, dtype=np.float64)
        self.supports.setflags(write=False)
        self.tau_sums.setflags(write=False)
        self.provenance = (
            tuple(provenance)
            if provenance is not None
            else (MINED,) * len(rules)
        )

    def __len__(self) -> int:
        return len(self.rules)

    @classmethod
    def from_rules(cls, rules, data: Dataset, provenance: str = INJECTED) -> "RulePool":
        """Pool over explicitly given rules (coverage computed from data)."""
        from .model import rule_mask

        rules = list(rules)
        masks = np.asarray([rule_mask(r, data) for r in rules], dtype=bool)
        return cls(
            rules=rules, masks=masks, tau=data.tau,
            provenance=[provenance] * len(rules),
        )

    def take(self, indices, tau) -> "RulePool":
        indices = list(indices)
        return RulePool(
            rules=[self.rules[i] for i in indices],
            masks=self.masks[indices],
            tau=tau,
            provenance=[self.provenance[i] for i in indices],
        )


def mine_rules(
    data: Dataset, constraints: Constraints, min_support: float = 0.01
) -> RulePool:
    """Depth-limited enumeration of conjunctions with support pruning.

    A conjunction whose support falls below ``min_support * n`` is neither
    kept nor extended; support is anti-monotone in conditions, so the pruning
    is exact. At most one condition per variable appears in a rule.
    """
    if not 0.0 <= min_support < 1.0:
        raise ConfigError(f"min_support must lie in [0, 1), got {min_support}")
    threshold = min_support * data.n
    n_cols = data.n_columns
    var_of = np.asarray([m.variable_id for m in data.meta])

    found: list[tuple[tuple[int, ...], np.ndarray]] = []

    def extend(refs, used_vars, mask):
        start = refs[-1] + 1 if refs else 0
        for j in range(start, n_cols):
            if var_of[j] in used_vars:
                continue
            sub = data.columns[j] if mask is None else mask & data.columns[j]
            if float(sub.sum()) < threshold:
                continue
            new_refs = refs + (j,)
            found.append((new_refs, sub))
            if len(new_refs) < constraints.l_max:
                extend(new_refs, used_vars | {var_of[j]}, sub)

    extend((), frozenset(), None)
    if not found:
        raise EmptyPoolError(
            f"no rules reach support {min_support:.4g}; lower min_support"
        )
    rules = [Rule(data.condition(j) for j in refs) for refs, _ in found]
    masks = np.asarray([m for _, m in found], dtype=bool)
    return RulePool(rules=rules, masks=masks, tau=data.tau)


def cull(pool: RulePool, n_rules: int, data: Dataset) -> RulePool:
    """Keep the ``n_rules`` best rules by the single-rule objective at
    alpha=1 (normalized-mean), ties broken by higher support then canonical
    order. Deterministic and idempotent; identity when the pool is small."""
    if n_rules < 1:
        raise ConfigError(f"n_rules must be >= 1, got {n_rules}")
    if len(pool) <= n_rules:
        return pool
    span = data.tau_max - data.tau_min
    supp = pool.supports.astype(np.float64)
    nonempty = supp > 0
    means = np.where(nonempty, pool.tau_sums / np.where(nonempty, supp, 1.0), 0.0)
    scores = np.where(
        nonempty, (supp / data.n) * ((means - data.tau_min) / span), 0.0
    )
    order = sorted(
        range(len(pool)),
        key=lambda i: (-scores[i], -pool.supports[i], pool.rules[i].key),
    )
    return pool.take(order[:n_rules], data.tau)

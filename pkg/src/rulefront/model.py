"""Core value objects: conditions, rules, rule sets, datasets, coverage masks.

A condition is a binary predicate on one variable, materialized as a binary
column of the dataset. A rule is a conjunction (AND) of conditions; a rule
set is a disjunction (OR) of rules. Coverage of a rule is the bitwise AND of
its condition columns; coverage of a rule set is the bitwise OR of its rules'
coverages.

All types here are immutable value objects and safe to share across workers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DegenerateInputError, StructuralError

# Substrings reserved by the rule-set text grammar; display names must avoid
# them so that parsing is unambiguous.
_RESERVED = (" & ", " | ", "(", ")")


@dataclass(frozen=True, order=True)
class Condition:
    """A single binary predicate, identified by its dataset column.

    Two conditions compare equal iff their ``column_ref`` are equal;
    ``display`` is the human-readable form used by the text grammar
    (e.g. ``"age<=q50"`` or ``"white=1"``).
    """

    column_ref: int
    variable_id: int = field(compare=False)
    display: str = field(compare=False)

    def __str__(self) -> str:
        return self.display


class Rule:
    """A conjunction of conditions, canonically sorted by column reference.

    Invariants enforced at construction: at least one condition, no duplicate
    conditions, and at most one condition per variable (conjoining two bins of
    the same variable either duplicates or empties coverage).
    """

    __slots__ = ("conditions", "_key")

    def __init__(self, conditions):
        conds = tuple(sorted(conditions, key=lambda c: c.column_ref))
        if not conds:
            raise StructuralError("a rule needs at least one condition")
        refs = [c.column_ref for c in conds]
        if len(set(refs)) != len(refs):
            raise StructuralError(f"duplicate condition in rule: {refs}")
        variables = [c.variable_id for c in conds]
        if len(set(variables)) != len(variables):
            raise StructuralError(
                f"rule conjoins two conditions on one variable: {variables}"
            )
        object.__setattr__(self, "conditions", conds)
        object.__setattr__(self, "_key", tuple(refs))

    @property
    def key(self) -> tuple[int, ...]:
        """Canonical identity: sorted condition column refs."""
        return self._key

    @property
    def length(self) -> int:
        return len(self.conditions)

    @property
    def variable_ids(self) -> frozenset[int]:
        return frozenset(c.variable_id for c in self.conditions)

    def __eq__(self, other) -> bool:
        return isinstance(other, Rule) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __lt__(self, other: "Rule") -> bool:
        return self._key < other._key

    def __str__(self) -> str:
        return "(" + " & ".join(c.display for c in self.conditions) + ")"

    def __repr__(self) -> str:
        return f"Rule{self._key}"


class RuleSet:
    """A disjunction of rules, canonically sorted.

    Invariants enforced at construction: no duplicate rules and no rule whose
    condition set contains another rule's (the longer rule is redundant for
    coverage and only burns complexity budget). The empty rule set is
    representable but is never a legal search state.
    """

    __slots__ = ("rules", "complexity", "_key")

    def __init__(self, rules=()):
        rs = tuple(sorted(rules, key=lambda r: r.key))
        keys = [r.key for r in rs]
        if len(set(keys)) != len(keys):
            raise StructuralError(f"duplicate rule in rule set: {keys}")
        for i, a in enumerate(rs):
            sa = set(a.key)
            for b in rs[i + 1 :]:
                sb = set(b.key)
                if sa <= sb or sb <= sa:
                    raise StructuralError(
                        f"redundant rule pair in rule set: {a.key} vs {b.key}"
                    )
        object.__setattr__(self, "rules", rs)
        object.__setattr__(self, "complexity", sum(r.length for r in rs))
        object.__setattr__(self, "_key", tuple(keys))

    @property
    def key(self) -> tuple[tuple[int, ...], ...]:
        """Canonical identity: sorted tuple of rule keys."""
        return self._key

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    def __eq__(self, other) -> bool:
        return isinstance(other, RuleSet) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __str__(self) -> str:
        return " | ".join(str(r) for r in self.rules)

    def __repr__(self) -> str:
        return f"RuleSet({' | '.join(map(str, self.rules)) or '<empty>'})"


def would_be_valid_ruleset(keys: list[tuple[int, ...]]) -> bool:
    """Cheap structural pre-check used by the search hot path.

    Equivalent to ``RuleSet`` construction succeeding for rules with these
    canonical keys (duplicates or subset/superset pairs make it invalid).
    """
    if len(set(keys)) != len(keys):
        return False
    sets = [set(k) for k in keys]
    for i, a in enumerate(sets):
        for b in sets[i + 1 :]:
            if a <= b or b <= a:
                return False
    return True


class CoverageMask:
    """Fixed-length bit vector over observations with a cached popcount."""

    __slots__ = ("bits", "popcount")

    def __init__(self, bits: np.ndarray):
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != 1:
            raise StructuralError("coverage mask must be one-dimensional")
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "popcount", int(bits.sum()))

    def __len__(self) -> int:
        return self.bits.shape[0]

    def __and__(self, other: "CoverageMask") -> "CoverageMask":
        return CoverageMask(self.bits & other.bits)

    def __or__(self, other: "CoverageMask") -> "CoverageMask":
        return CoverageMask(self.bits | other.bits)

    def __eq__(self, other) -> bool:
        return isinstance(other, CoverageMask) and bool(
            np.array_equal(self.bits, other.bits)
        )

    def __hash__(self) -> int:
        return hash(self.fingerprint())

    def fingerprint(self) -> str:
        """Stable hash of the covered index set, used for deduplication."""
        return hashlib.sha1(np.packbits(self.bits).tobytes()).hexdigest()

    def __repr__(self) -> str:
        return f"CoverageMask(n={len(self)}, popcount={self.popcount})"


@dataclass(frozen=True)
class ColumnMeta:
    """How one binary condition column was derived from a raw variable."""

    variable: str
    variable_id: int
    op: str  # "eq" | "ne" | "le" | "gt"
    value: object
    display: str


class Dataset:
    """Immutable table of binary condition columns plus effect estimates.

    ``columns`` is a (n_columns, n) boolean matrix, one row per candidate
    condition. ``tau`` holds the per-observation treatment-effect estimates;
    optional ``y`` (outcome) and ``d`` (binary treatment) support inference.
    """

    __slots__ = (
        "n",
        "columns",
        "tau",
        "tau_min",
        "tau_max",
        "y",
        "d",
        "meta",
        "_display_index",
    )

    def __init__(self, columns, tau, meta, y=None, d=None):
        columns = np.array(columns, dtype=bool, order="C")
        tau = np.array(tau, dtype=np.float64)
        if columns.ndim != 2:
            raise DataError("condition columns must form a 2-d matrix")
        if tau.ndim != 1 or tau.shape[0] != columns.shape[1]:
            raise DataError(
                f"tau length {tau.shape} does not match n={columns.shape[1]}"
            )
        if len(meta) != columns.shape[0]:
            raise DataError("one metadata record required per condition column")
        if not np.all(np.isfinite(tau)):
            raise DataError("tau contains non-finite values")
        if tau.shape[0] == 0:
            raise DataError("dataset has no observations")
        tau_min = float(tau.min())
        tau_max = float(tau.max())
        if tau_max == tau_min:
            raise DegenerateInputError(
                "constant effect estimates: the objective cannot rank subgroups"
            )
        if y is not None:
            y = np.array(y, dtype=np.float64)
            if y.shape != tau.shape:
                raise DataError("outcome column length mismatch")
            y.setflags(write=False)
        if d is not None:
            d = np.array(d)
            if d.shape != tau.shape:
                raise DataError("treatment column length mismatch")
            uniq = set(np.unique(d).tolist())
            if not uniq <= {0, 1}:
                raise DataError(f"treatment column must be binary 0/1, got {uniq}")
            d = d.astype(np.int8)
            d.setflags(write=False)
        displays = [m.display for m in meta]
        for name in displays:
            for token in _RESERVED:
                if token in name:
                    raise DataError(
                        f"column display name {name!r} contains reserved token {token!r}"
                    )
        if len(set(displays)) != len(displays):
            raise DataError("column display names must be unique")
        columns.setflags(write=False)
        tau.setflags(write=False)
        self.n = int(columns.shape[1])
        self.columns = columns
        self.tau = tau
        self.tau_min = tau_min
        self.tau_max = tau_max
        self.y = y
        self.d = d
        self.meta = tuple(meta)
        self._display_index = {m.display: i for i, m in enumerate(self.meta)}

    @property
    def n_columns(self) -> int:
        return self.columns.shape[0]

    def condition(self, column_ref: int) -> Condition:
        """The Condition value object for one column index."""
        if not 0 <= column_ref < self.n_columns:
            raise StructuralError(f"unknown column reference {column_ref}")
        m = self.meta[column_ref]
        return Condition(
            column_ref=column_ref, variable_id=m.variable_id, display=m.display
        )

    def condition_by_display(self, display: str) -> Condition:
        try:
            return self.condition(self._display_index[display])
        except KeyError:
            raise StructuralError(f"unknown condition name {display!r}") from None

    def has_outcome(self) -> bool:
        return self.y is not None and self.d is not None

    def subset(self, indices: np.ndarray) -> "Dataset":
        """Row-subset dataset (used by the train/test split)."""
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(
            columns=self.columns[:, indices],
            tau=self.tau[indices],
            meta=self.meta,
            y=None if self.y is None else self.y[indices],
            d=None if self.d is None else self.d[indices],
        )


def rule_mask(rule: Rule, data: Dataset) -> np.ndarray:
    """Raw boolean coverage of a rule: AND of its condition columns."""
    refs = rule.key
    if refs[-1] >= data.n_columns or refs[0] < 0:
        raise StructuralError(f"rule references unknown column in {refs}")
    out = data.columns[refs[0]]
    for ref in refs[1:]:
        out = out & data.columns[ref]
    return out if len(refs) > 1 else out.copy()


def ruleset_mask(rs: RuleSet, data: Dataset) -> np.ndarray:
    """Raw boolean coverage of a rule set: OR of its rules' coverages."""
    out = np.zeros(data.n, dtype=bool)
    for rule in rs.rules:
        out |= rule_mask(rule, data)
    return out


def coverage_of_rule(rule: Rule, data: Dataset) -> CoverageMask:
    """Coverage of a rule; bit i is set iff observation i satisfies every
    condition in the rule."""
    return CoverageMask(rule_mask(rule, data))


def coverage_of_ruleset(rs: RuleSet, data: Dataset) -> CoverageMask:
    """Coverage of a rule set; the empty rule set covers nothing."""
    return CoverageMask(ruleset_mask(rs, data))


def subgroup_effect(mask: CoverageMask, data: Dataset) -> float:
    """Mean effect estimate over covered observations; NaN when empty.

    Callers that require a value treat NaN as the "empty subgroup" signal.
    """
    if mask.popcount == 0:
        return float("nan")
    return float(data.tau[mask.bits].mean())


def format_ruleset(rs: RuleSet) -> str:
    """Render a rule set in the text grammar:
    ``rule (" | " rule)*`` with ``rule := "(" cond (" & " cond)* ")"``."""
    if rs.n_rules == 0:
        raise StructuralError("cannot format an empty rule set")
    return str(rs)


def parse_ruleset(text: str, data: Dataset) -> RuleSet:
    """Parse the text grammar back into a canonical RuleSet.

    Round-trips exactly with :func:`format_ruleset` for any valid rule set
    over ``data``'s columns.
    """
    text = text.strip()
    if not text:
        raise StructuralError("empty rule-set text")
    rules = []
    for chunk in text.split(" | "):
        chunk = chunk.strip()
        if not (chunk.startswith("(") and chunk.endswith(")")):
            raise StructuralError(f"rule {chunk!r} is not parenthesized")
        names = chunk[1:-1].split(" & ")
        rules.append(Rule(data.condition_by_display(n.strip()) for n in names))
    return RuleSet(rules)

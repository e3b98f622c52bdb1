"""Synthetic data generators for end-to-end checks and demos.

Two designs: a discrete one where binary variables and rule-based logic
assign the effects (with presets producing a concave or a convex frontier),
and a continuous "adversarial" one where the effect surface is a smooth
product of uniform variables and conditions only exist after quantile
discretization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import pandas as pd

from .errors import ConfigError
from .frontier import Front
from .model import Dataset

CONCAVE_EFFECTS = (4.5, 6.5, 7.0)
CONVEX_EFFECTS = (1.0, 5.0, 10.0)

DEFAULT_DISCRETE_RULES = (("A",), ("B", "C"), ("D", "E", "F"))

# Variables entering the continuous effect surface, grouped by factor.
CONTINUOUS_FACTORS = (("X1", "X2"), ("X4", "X5"), ("X7", "X8"))


def _letters(count: int) -> list[str]:
    if count <= 26:
        return [chr(ord("A") + i) for i in range(count)]
    return [f"V{i + 1}" for i in range(count)]


@dataclass(frozen=True)
class DiscreteDgpSpec:
    """Fair-coin binary variables; effects assigned rule by rule in list
    order, later rules overwriting earlier ones on overlap."""

    n: int = 1000
    n_variables: int = 10
    rules: tuple[tuple[str, ...], ...] = DEFAULT_DISCRETE_RULES
    effects: tuple[float, ...] = CONCAVE_EFFECTS
    seed: int = 0
    noise_sd: float = 0.0

    def __post_init__(self):
        if len(self.rules) != len(self.effects):
            raise ConfigError("one effect magnitude required per rule")
        names = set(_letters(self.n_variables))
        for rule in self.rules:
            missing = set(rule) - names
            if missing:
                raise ConfigError(f"rule references unknown variables {missing}")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be nonnegative")

    @classmethod
    def preset(cls, name: str, **kwargs) -> "DiscreteDgpSpec":
        effects = {"concave": CONCAVE_EFFECTS, "convex": CONVEX_EFFECTS}.get(name)
        if effects is None:
            raise ConfigError(f"unknown preset {name!r} (concave or convex)")
        return cls(effects=effects, **kwargs)


@dataclass(frozen=True)
class ContinuousDgpSpec:
    """Ten uniform(0,1) variables; the effect is proportional to
    (X1+X2+1)(X4+X5+1)(X7+X8+1), so it is monotone in the six relevant
    variables and constant in X3, X6, X9, X10."""

    n: int = 10_000
    scale: float = 1.0
    seed: int = 0
    noise_sd: float = 0.0

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be nonnegative")


@dataclass(frozen=True)
class SimulatedData:
    frame: pd.DataFrame
    tau_hat: np.ndarray
    tau_true: np.ndarray
    truth: dict = field(default_factory=dict)


def gen_discrete(spec: DiscreteDgpSpec) -> SimulatedData:
    rng = np.random.default_rng(spec.seed)
    names = _letters(spec.n_variables)
    values = rng.integers(0, 2, size=(spec.n, spec.n_variables))
    frame = pd.DataFrame(values, columns=names)
    tau = np.zeros(spec.n)
    for rule, mu in zip(spec.rules, spec.effects):
        members = np.ones(spec.n, dtype=bool)
        for var in rule:
            members &= frame[var].to_numpy() == 1
        tau[members] = mu
    tau_hat = tau.copy()
    if spec.noise_sd > 0:
        tau_hat = tau_hat + rng.normal(0.0, spec.noise_sd, size=spec.n)
    truth = {
        "kind": "discrete",
        "rules": [list(r) for r in spec.rules],
        "effects": list(spec.effects),
        "variables": names,
    }
    return SimulatedData(frame=frame, tau_hat=tau_hat, tau_true=tau, truth=truth)


def continuous_tau(frame: pd.DataFrame, scale: float = 1.0) -> np.ndarray:
    x = {name: frame[name].to_numpy(dtype=np.float64) for name in frame.columns}
    return scale * (
        (x["X1"] + x["X2"] + 1.0)
        * (x["X4"] + x["X5"] + 1.0)
        * (x["X7"] + x["X8"] + 1.0)
    )


def gen_continuous(spec: ContinuousDgpSpec) -> SimulatedData:
    rng = np.random.default_rng(spec.seed)
    names = [f"X{i + 1}" for i in range(10)]
    frame = pd.DataFrame(rng.uniform(0.0, 1.0, size=(spec.n, 10)), columns=names)
    tau = continuous_tau(frame, spec.scale)
    tau_hat = tau.copy()
    if spec.noise_sd > 0:
        tau_hat = tau_hat + rng.normal(0.0, spec.noise_sd, size=spec.n)
    truth = {
        "kind": "continuous",
        "factors": [list(f) for f in CONTINUOUS_FACTORS],
        "relevant": sorted({v for f in CONTINUOUS_FACTORS for v in f}),
        "real_pairs": sorted(sorted(p) for p in interaction_catalog()),
    }
    return SimulatedData(frame=frame, tau_hat=tau_hat, tau_true=tau, truth=truth)


def interaction_catalog(
    factors: tuple[tuple[str, ...], ...] = CONTINUOUS_FACTORS,
) -> set[frozenset[str]]:
    """Variable pairs counted as real interactions: cross-factor pairs (their
    product terms appear when the effect surface is expanded) plus the
    within-factor pairs of jointly relevant variables."""
    pairs: set[frozenset[str]] = set()
    for fa, fb in combinations(factors, 2):
        for a in fa:
            for b in fb:
                pairs.add(frozenset((a, b)))
    for f in factors:
        for a, b in combinations(f, 2):
            pairs.add(frozenset((a, b)))
    return pairs


@dataclass(frozen=True)
class FaceValidity:
    """Aggregate structure checks of a discovered front against the truth.

    ``real_interaction_rate``: share of within-rule variable pairs (counted
    with repeats across the front) that are real interactions.
    ``directionality_rate``: share of conditions (with repeats) pointing in
    the "above the cut" direction.
    Rates are None when their denominator is empty.
    """

    n_pairs: int
    n_real_pairs: int
    n_conditions: int
    n_above: int

    @property
    def real_interaction_rate(self) -> float | None:
        return None if self.n_pairs == 0 else self.n_real_pairs / self.n_pairs

    @property
    def directionality_rate(self) -> float | None:
        return None if self.n_conditions == 0 else self.n_above / self.n_conditions


def face_validity(
    front: Front, data: Dataset, catalog: set[frozenset[str]] | None = None
) -> FaceValidity:
    """Score every within-rule variable pair in the front against the
    interaction catalog and tally condition polarities."""
    if catalog is None:
        catalog = interaction_catalog()
    n_pairs = n_real = n_conditions = n_above = 0
    for point in front:
        for rule in point.ruleset.rules:
            metas = [data.meta[c.column_ref] for c in rule.conditions]
            for ma, mb in combinations(metas, 2):
                n_pairs += 1
                if frozenset((ma.variable, mb.variable)) in catalog:
                    n_real += 1
            for m in metas:
                n_conditions += 1
                if m.op == "gt":
                    n_above += 1
    return FaceValidity(n_pairs, n_real, n_conditions, n_above)

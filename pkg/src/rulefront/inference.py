"""Split-sample inference and power-based rule-set selection.

Searching on one split and testing on the other keeps hypothesis tests
valid: the tested subgroup was not chosen by looking at the test data. Tests
use the normal reference distribution (a deliberate approximation; at the
intended sample sizes the difference from t is negligible and power stays
closed-form) and Welch (unpooled) variances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import ConfigError, DataError, InsufficientDataError
from .frontier import Front, FrontierPoint
from .model import Dataset, ruleset_mask

_NORM = NormalDist()

TWO_SIDED = "two-sided"
GREATER = "greater"
LESS = "less"
_SIDES = (TWO_SIDED, GREATER, LESS)

FIXED_THRESHOLD = "fixed-threshold"
GROUP_COMPARISON = "group-comparison"


@dataclass(frozen=True)
class SplitPlan:
    """Train/test split: fraction, seed, and optional stratification on the
    treatment indicator so both splits contain both arms."""

    train_fraction: float = 0.7
    seed: int = 0
    stratify: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(
                f"train_fraction must lie in (0, 1), got {self.train_fraction}"
            )


@dataclass(frozen=True)
class TestResult:
    estimate: float
    std_error: float
    statistic: float
    p_value: float
    kind: str
    sided: str
    degenerate: bool = False


def _p_value(statistic: float, sided: str) -> float:
    if sided == TWO_SIDED:
        return 2.0 * (1.0 - _NORM.cdf(abs(statistic)))
    if sided == GREATER:
        return 1.0 - _NORM.cdf(statistic)
    return _NORM.cdf(statistic)


def _check_sided(sided: str):
    if sided not in _SIDES:
        raise ConfigError(f"sided must be one of {_SIDES}, got {sided!r}")


def split(data: Dataset, plan: SplitPlan) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive, seed-deterministic train/test partition.

    Unstratified, the train split holds ``floor(fraction * n)`` rows;
    stratified splits apply the floor within each treatment arm.
    """
    if data.n < 2:
        raise DataError("need at least 2 observations to split")
    rng = np.random.default_rng(plan.seed)
    if plan.stratify and data.d is not None:
        train_parts = []
        for arm in (0, 1):
            arm_idx = np.flatnonzero(data.d == arm)
            if arm_idx.size == 0:
                raise DataError(f"treatment arm {arm} is empty; cannot stratify")
            perm = rng.permutation(arm_idx)
            k = int(math.floor(plan.train_fraction * arm_idx.size))
            train_parts.append(perm[:k])
        train_idx = np.sort(np.concatenate(train_parts))
    else:
        perm = rng.permutation(data.n)
        k = int(math.floor(plan.train_fraction * data.n))
        train_idx = np.sort(perm[:k])
    mask = np.zeros(data.n, dtype=bool)
    mask[train_idx] = True
    test_idx = np.flatnonzero(~mask)
    if train_idx.size == 0 or test_idx.size == 0:
        raise DataError("split produced an empty train or test set")
    train, test = data.subset(train_idx), data.subset(test_idx)
    if plan.stratify and data.d is not None:
        for part, name in ((train, "train"), (test, "test")):
            if part.d.min() == part.d.max():
                raise DataError(f"{name} split lost a treatment arm")
    return train, test


def _arm_stats(y: np.ndarray) -> tuple[float, float, int]:
    n = y.shape[0]
    return float(y.mean()), float(y.std(ddof=1)), n


def diff_in_means(
    rs, data: Dataset, c: float = 0.0, sided: str = TWO_SIDED
) -> TestResult:
    """Difference in mean outcomes between arms over covered observations,
    tested against the fixed threshold ``c`` with Welch standard errors."""
    _check_sided(sided)
    if not data.has_outcome():
        raise DataError("inference requires outcome and treatment columns")
    covered = ruleset_mask(rs, data)
    y1 = data.y[covered & (data.d == 1)]
    y0 = data.y[covered & (data.d == 0)]
    if y1.shape[0] < 2 or y0.shape[0] < 2:
        raise InsufficientDataError(
            f"need >= 2 covered observations per arm, got {y1.shape[0]} treated "
            f"and {y0.shape[0]} control"
        )
    m1, s1, n1 = _arm_stats(y1)
    m0, s0, n0 = _arm_stats(y0)
    estimate = m1 - m0
    se = math.sqrt(s1**2 / n1 + s0**2 / n0)
    if se == 0.0:
        degenerate_stat = 0.0 if estimate == c else math.copysign(math.inf, estimate - c)
        return TestResult(
            estimate=estimate,
            std_error=0.0,
            statistic=degenerate_stat,
            p_value=1.0 if estimate == c else 0.0,
            kind=FIXED_THRESHOLD,
            sided=sided,
            degenerate=True,
        )
    statistic = (estimate - c) / se
    return TestResult(
        estimate=estimate,
        std_error=se,
        statistic=statistic,
        p_value=_p_value(statistic, sided),
        kind=FIXED_THRESHOLD,
        sided=sided,
    )


def compare_groups(
    tau_a: float,
    tau_b: float,
    var_a: float,
    var_b: float,
    cov_ab: float = 0.0,
    sided: str = TWO_SIDED,
) -> TestResult:
    """Test H0: tau_A - tau_B = 0 with propagated variance
    ``var_A + var_B - 2 * cov_AB`` (the estimated-threshold case, e.g.
    comparing a subgroup effect against the overall ATE)."""
    _check_sided(sided)
    if var_a < 0 or var_b < 0:
        raise ConfigError("variances must be nonnegative")
    bound = math.sqrt(var_a * var_b)
    if abs(cov_ab) > bound * (1 + 1e-12) + 1e-300:
        raise ConfigError(
            f"|cov_AB|={abs(cov_ab)} exceeds sqrt(var_A*var_B)={bound}"
        )
    variance = var_a + var_b - 2.0 * cov_ab
    if variance < -1e-12 * max(var_a + var_b, 1.0):
        raise ConfigError(f"propagated variance is negative: {variance}")
    variance = max(variance, 0.0)
    estimate = tau_a - tau_b
    se = math.sqrt(variance)
    if se == 0.0:
        return TestResult(
            estimate=estimate,
            std_error=0.0,
            statistic=0.0 if estimate == 0 else math.copysign(math.inf, estimate),
            p_value=1.0 if estimate == 0 else 0.0,
            kind=GROUP_COMPARISON,
            sided=sided,
            degenerate=True,
        )
    statistic = estimate / se
    return TestResult(
        estimate=estimate,
        std_error=se,
        statistic=statistic,
        p_value=_p_value(statistic, sided),
        kind=GROUP_COMPARISON,
        sided=sided,
    )


def plug_in_covariance(tau: np.ndarray, mask_a: np.ndarray, mask_b: np.ndarray) -> float:
    """Plug-in covariance between two subgroup means of the same estimates
    over overlapping samples: Cov(mean_A, mean_B) = Var(tau on A&B) *
    |A&B| / (|A| * |B|)."""
    both = mask_a & mask_b
    n_both = int(both.sum())
    if n_both < 2:
        return 0.0
    v = float(tau[both].var(ddof=1))
    return v * n_both / (int(mask_a.sum()) * int(mask_b.sum()))


def power(
    effect: float,
    sd1: float,
    sd0: float,
    n1: float,
    n0: float,
    alpha_level: float = 0.05,
    sided: str = TWO_SIDED,
) -> float:
    """Normal-approximation power of the two-sample test at the planned arm
    sizes; two-sided by default (conservative)."""
    _check_sided(sided)
    if sd1 <= 0 or sd0 <= 0:
        raise ConfigError("arm standard deviations must be positive")
    if n1 < 2 or n0 < 2:
        raise ConfigError("planned arm sizes must be at least 2")
    if not 0.0 < alpha_level < 1.0:
        raise ConfigError(f"alpha_level must lie in (0, 1), got {alpha_level}")
    se = math.sqrt(sd1**2 / n1 + sd0**2 / n0)
    lam = abs(effect) / se
    if sided == TWO_SIDED:
        z = _NORM.inv_cdf(1.0 - alpha_level / 2.0)
        return _NORM.cdf(lam - z) + _NORM.cdf(-lam - z)
    z = _NORM.inv_cdf(1.0 - alpha_level)
    return _NORM.cdf(lam - z)


@dataclass(frozen=True)
class PowerRow:
    """Power annotation for one frontier point (None when skipped)."""

    point: FrontierPoint
    power: float | None
    effect: float | None
    n1: float | None
    n0: float | None
    sd1: float | None = None
    sd0: float | None = None
    note: str | None = None


def power_rank(
    front: Front,
    train_data: Dataset,
    test_size: int,
    alpha_level: float = 0.05,
    sided: str = TWO_SIDED,
) -> list[PowerRow]:
    """Annotate frontier points with planned test-split power and rank.

    Arm means/sds come from covered training observations; planned arm sizes
    are ``support_rate * test_size`` shared out by the covered training
    treated share. Points without enough covered data are flagged and sort
    last. Output is sorted by power descending.
    """
    if not train_data.has_outcome():
        raise DataError("power ranking requires outcome and treatment columns")
    if test_size < 2:
        raise ConfigError("test_size must be at least 2")
    rows = []
    for point in front:
        covered = ruleset_mask(point.ruleset, train_data)
        y1 = train_data.y[covered & (train_data.d == 1)]
        y0 = train_data.y[covered & (train_data.d == 0)]
        n_cov = int(covered.sum())
        if y1.shape[0] < 2 or y0.shape[0] < 2:
            rows.append(
                PowerRow(point, None, None, None, None,
                         note="insufficient covered data per arm")
            )
            continue
        share1 = y1.shape[0] / n_cov
        n1 = point.support_rate * test_size * share1
        n0 = point.support_rate * test_size * (1.0 - share1)
        m1, s1, _ = _arm_stats(y1)
        m0, s0, _ = _arm_stats(y0)
        effect = m1 - m0
        if s1 <= 0 or s0 <= 0:
            rows.append(
                PowerRow(point, None, effect, n1, n0, s1, s0,
                         note="zero outcome variance in an arm")
            )
            continue
        if n1 < 2 or n0 < 2:
            rows.append(
                PowerRow(point, None, effect, n1, n0, s1, s0,
                         note="planned arm size below 2")
            )
            continue
        rows.append(
            PowerRow(
                point,
                power(effect, s1, s0, n1, n0, alpha_level, sided),
                effect, n1, n0, s1, s0,
            )
        )
    return sorted(
        rows, key=lambda r: -math.inf if r.power is None else r.power, reverse=True
    )

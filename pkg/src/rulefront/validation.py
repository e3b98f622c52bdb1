"""Input validation helpers for the estimator layer."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .errors import DataError
from .mining import DiscretizationSpec, VariableSpec


def as_frame(X, feature_names=None) -> pd.DataFrame:
    """Coerce estimator input into a DataFrame with stable column names."""
    if isinstance(X, pd.DataFrame):
        return X
    arr = np.asarray(X)
    if arr.ndim != 2:
        raise DataError(f"X must be 2-dimensional, got shape {arr.shape}")
    if feature_names is None:
        feature_names = [f"x{i}" for i in range(arr.shape[1])]
    if len(feature_names) != arr.shape[1]:
        raise DataError("feature_names length does not match X")
    return pd.DataFrame(arr, columns=list(feature_names))


def check_tau(tau, n: int) -> np.ndarray:
    tau = np.asarray(tau, dtype=np.float64).ravel()
    if tau.shape[0] != n:
        raise DataError(f"tau has {tau.shape[0]} entries for {n} rows")
    if not np.all(np.isfinite(tau)):
        raise DataError("tau contains non-finite values")
    return tau


def resolve_spec(frame: pd.DataFrame, feature_types, quantiles) -> DiscretizationSpec:
    """Build a discretization spec from estimator parameters.

    ``feature_types`` may be None (infer per column), a single kind applied
    to every column, a {name: kind} mapping, or a ready DiscretizationSpec.
    """
    if isinstance(feature_types, DiscretizationSpec):
        return feature_types
    quantiles = tuple(quantiles)
    if feature_types is None:
        inferred = DiscretizationSpec.infer(frame)
        return DiscretizationSpec(
            {
                name: (
                    VariableSpec(vs.kind, quantiles)
                    if vs.kind == "ordinal"
                    else vs
                )
                for name, vs in inferred.variables.items()
            }
        )
    if isinstance(feature_types, str):
        feature_types = {name: feature_types for name in frame.columns}
    out = {}
    for name in frame.columns:
        if name not in feature_types:
            raise DataError(f"feature_types is missing column {name!r}")
        kind = feature_types[name]
        out[name] = (
            VariableSpec(kind, quantiles) if kind == "ordinal" else VariableSpec(kind)
        )
    return DiscretizationSpec(out)

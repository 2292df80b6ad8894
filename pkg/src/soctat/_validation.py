"""Input validation helpers shared by the estimators and config records."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array

FILL_POLICIES = ("random", "zeros", "ones")


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_non_negative_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
    return int(value)


def check_fraction(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


def check_seed(value) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or not 0 <= value < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {value!r}")
    return int(value)


def check_fill_policy(value) -> str:
    if value not in FILL_POLICIES:
        raise ValueError(f"fill_policy must be one of {FILL_POLICIES}, got {value!r}")
    return value


def check_core_features(X) -> np.ndarray:
    """Validate an ``(n_cores, 2)`` array of ``[n_inputs, n_gates]`` rows."""
    raw = check_array(X, dtype=None, ensure_min_samples=1)
    X = raw.astype(np.int64)
    if not np.array_equal(X, raw):
        raise ValueError("core features must be whole numbers")
    if X.shape[1] != 2:
        raise ValueError(f"expected 2 feature columns [n_inputs, n_gates], got {X.shape[1]}")
    if (X[:, 0] < 1).any():
        raise ValueError("n_inputs must be >= 1 for every core")
    if (X[:, 1] < 0).any():
        raise ValueError("n_gates must be >= 0 for every core")
    return X

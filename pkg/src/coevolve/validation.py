"""Input checks shared by the estimator front-ends."""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .objectives import PpaMetrics, SynthesisFailed

OBJECTIVE_COLUMNS = ("correctness", "area", "delay", "power")


def check_objectives(X) -> np.ndarray:
    """Validate an ``(n, 4)`` array of ``(correctness, area, delay, power)`` rows.

    A row whose three PPA entries are all NaN stands for a failed synthesis.
    """
    X = check_array(X, dtype=np.float64, ensure_all_finite="allow-nan", ensure_min_samples=0)
    if X.shape[1] != 4:
        raise ValueError(f"expected 4 columns {OBJECTIVE_COLUMNS}, got {X.shape[1]}")
    c = X[:, 0]
    if np.isnan(c).any() or ((c < 0) | (c > 1)).any():
        raise ValueError("correctness must lie in [0, 1]")
    ppa = X[:, 1:]
    nan = np.isnan(ppa)
    partial = nan.any(axis=1) & ~nan.all(axis=1)
    if partial.any():
        raise ValueError(f"rows {np.flatnonzero(partial).tolist()} mix NaN and numeric PPA values")
    finite = ppa[~nan.all(axis=1)]
    if (~np.isfinite(finite)).any() or (finite < 0).any():
        raise ValueError("PPA values must be finite and non-negative (use NaN for failed synthesis)")
    return X


def row_ppa(row) -> PpaMetrics | SynthesisFailed:
    if np.isnan(row[1:]).all():
        return SynthesisFailed()
    return PpaMetrics(float(row[1]), float(row[2]), float(row[3]))


def check_int(value, name: str, minimum: int = 0) -> int:
    if not isinstance(value, numbers.Integral) or isinstance(value, bool) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_fraction(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    return float(value)


def check_target_bits(X) -> tuple[bool, ...]:
    bits = np.asarray(X).ravel()
    if bits.size != 32 or not np.isin(bits, (0, 1)).all():
        raise ValueError("a synthetic target must be 32 values in {0, 1}")
    return tuple(bool(b) for b in bits)

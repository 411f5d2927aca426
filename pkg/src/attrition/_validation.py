"""Input validation and seeding helpers shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ConfigError, DataError


def as_matrix(X, name: str = "X") -> np.ndarray:
    """Return ``X`` as a finite 2-D float array (GradeMatrix accepted)."""
    try:
        return check_array(X, dtype=np.float64, ensure_2d=True, copy=False)
    except ValueError as exc:
        raise DataError(f"{name}: {exc}") from None


def as_labels(y, n: int) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n:
        raise DataError(f"expected {n} labels, got shape {y.shape}")
    if y.dtype != bool:
        if not np.isin(y, (0, 1)).all():
            raise DataError("labels must be boolean or 0/1")
        y = y.astype(bool)
    return y


def as_vector(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != d:
        raise DataError(f"expected a vector of dimension {d}, got shape {x.shape}")
    return x


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 64-bit sub-seed for the stream identified by ``keys``.

    Independent of call order, so parallel and serial schedules agree.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    )

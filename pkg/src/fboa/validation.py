"""Input checking shared by the estimators and the functional API."""

from __future__ import annotations

import numbers

import numpy as np


def check_binary_matrix(X, *, n_features=None, allow_empty=False, name="X"):
    """Return ``X`` as a 2-D ``uint8`` array of 0/1 values.

    Raises
    ------
    ValueError
        If ``X`` is not two-dimensional, holds values other than 0 and 1,
        or has the wrong number of columns.
    """
    X = np.asarray(X)
    if X.ndim == 1 and X.size == 0 and allow_empty and n_features is not None:
        X = X.reshape(0, n_features)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] == 0 and not allow_empty:
        raise ValueError(f"{name} must contain at least one row")
    if X.size and not np.isin(X, (0, 1)).all():
        raise ValueError(f"{name} must contain only binary values 0/1")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(
            f"{name} has {X.shape[1]} columns, expected {n_features}"
        )
    return X.astype(np.uint8, copy=False)


def check_bits(x, n, name="x"):
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-D bit vector")
    if x.shape[0] != n:
        raise ValueError(f"{name} has length {x.shape[0]}, expected {n}")
    if not np.isin(x, (0, 1)).all():
        raise ValueError(f"{name} must contain only binary values 0/1")
    return x.astype(np.uint8, copy=False)


def check_count(value, name, minimum=0):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_order(order, m):
    """Validate a node ordering as a permutation of ``range(m)``."""
    if order is None:
        return list(range(m))
    order = [int(v) for v in order]
    if sorted(order) != list(range(m)):
        raise ValueError(f"order must be a permutation of 0..{m - 1}, got {order}")
    return order


def bits_to_int(X):
    """Interpret each row as an integer with column 0 most significant."""
    X = np.atleast_2d(X)
    n = X.shape[1]
    if n > 62:
        return np.array([int("".join(map(str, row)), 2) for row in X], dtype=object)
    weights = np.left_shift(np.int64(1), np.arange(n - 1, -1, -1, dtype=np.int64))
    return X.astype(np.int64) @ weights

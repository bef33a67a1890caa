"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np

from .exceptions import ConfigurationError, DomainError

F_TAGS = ("x", "log")


def check_f_tag(f_tag):
    if f_tag not in F_TAGS:
        raise ConfigurationError(f"f_tag must be one of {F_TAGS}, got {f_tag!r}")
    return f_tag


def check_positive(value, name):
    if not np.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_probability(value, name):
    if not 0.0 < value < 1.0:
        raise ConfigurationError(f"{name} must lie in (0, 1), got {value!r}")
    return float(value)


def check_count(value, name, minimum=0):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigurationError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_q(q):
    if q not in (0, 1):
        raise ConfigurationError(f"q must be 0 (complex) or 1 (real), got {q!r}")
    return int(q)


def check_symmetric(S, rtol=1e-10):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise DomainError("matrix contains non-finite entries")
    scale = np.max(np.abs(S)) if S.size else 0.0
    asym = np.max(np.abs(S - S.T)) if S.size else 0.0
    if asym > rtol * max(scale, np.finfo(float).tiny):
        raise DomainError(
            f"matrix is not symmetric (max |S - S^T| = {asym:.3g}, scale {scale:.3g})"
        )
    return S


def check_matrix(X, min_rows=2, min_cols=2):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DomainError(f"expected a 2-d array, got {X.ndim} dimension(s)")
    n, p = X.shape
    if n < min_rows or p < min_cols:
        raise DomainError(
            f"need at least {min_rows} observations and {min_cols} variables, got {n}x{p}"
        )
    if not np.all(np.isfinite(X)):
        raise DomainError("data contain missing or non-finite values")
    return X

"""Input checks shared by the estimator and the command line."""

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import DomainError
from .flag import FlagType, as_flag_type

DENOMINATORS = ("n", "n-1")


def check_flag_type(flag_type, d=None):
    """Coerce to FlagType and, if given, check it sums to ``d``."""
    if flag_type is None:
        raise DomainError("a flag type is required")
    ft = as_flag_type(flag_type)
    if d is not None and ft.d != d:
        raise DomainError(f"flag type {ft} sums to {ft.d}, data dimension is {d}")
    return ft


def check_data(X, flag_type=None, min_samples=2):
    """Finite 2-D float data with at least ``min_samples`` rows."""
    try:
        X = check_array(X, dtype=np.float64, ensure_min_samples=min_samples)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    if flag_type is not None:
        check_flag_type(flag_type, X.shape[1])
    return X


def check_denominator(denominator):
    if denominator not in DENOMINATORS:
        raise DomainError(f"denominator must be one of {DENOMINATORS}, got {denominator!r}")
    return denominator


def check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def check_square(M, d, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.shape != (d, d):
        raise DomainError(f"{name} must be {d} x {d}, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError(f"{name} has non-finite entries")
    return M


__all__ = ["check_flag_type", "check_data", "check_denominator", "check_alpha",
           "check_square", "FlagType"]

"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

import numbers

import numpy as np

from .exceptions import DimensionMismatch, NotSymmetric

SYMMETRY_TOL = 1e-10


def check_matrix(a, name="matrix", shape=None):
    """Return ``a`` as a finite 2-D float array (a copy)."""
    arr = np.array(a, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    if shape is not None and arr.shape != tuple(shape):
        raise DimensionMismatch(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    return arr


def check_square(a, name="matrix"):
    arr = check_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    return arr


def check_symmetric(a, name="matrix", tol=SYMMETRY_TOL):
    """Square finite array whose asymmetry is below ``tol`` relative to its largest entry."""
    arr = check_square(a, name)
    scale = max(1.0, np.max(np.abs(arr), initial=0.0))
    if np.max(np.abs(arr - arr.T), initial=0.0) > tol * scale:
        raise NotSymmetric(f"{name} is not symmetric within {tol:g} (relative)")
    return arr


def check_vector(v, name="vector", size=None):
    """Return ``v`` as a finite 1-D float array (a copy)."""
    arr = np.array(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise DimensionMismatch(f"{name} must have length {size}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_scalar(value, name, *, lower=None, strict=False, integral=False):
    if integral:
        if not isinstance(value, numbers.Integral) or isinstance(value, bool):
            raise TypeError(f"{name} must be an integer, got {value!r}")
    elif not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite")
    if lower is not None:
        if strict and not value > lower:
            raise ValueError(f"{name} must be > {lower}, got {value}")
        if not strict and not value >= lower:
            raise ValueError(f"{name} must be >= {lower}, got {value}")
    return value

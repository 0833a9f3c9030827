"""Small input-validation helpers shared across modules."""

import numbers

import numpy as np

from .exceptions import ContractViolation


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ContractViolation(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ContractViolation(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise ContractViolation(f"{name} must be >= 0, got {value!r}")
    return float(value)


def check_int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ContractViolation(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ContractViolation(f"{name} must be >= {minimum}, got {value!r}")
    return int(value)


def check_array_1d(values, name, length=None):
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ContractViolation(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ContractViolation(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} contains non-finite values")
    return arr


def check_same_grid(a, b, name_a="a", name_b="b"):
    if a.n_points != b.n_points or a.left != b.left or a.right != b.right:
        raise ContractViolation(f"{name_a} and {name_b} are sampled on different grids")


def as_complex(value, name="lambda"):
    try:
        z = complex(value)
    except (TypeError, ValueError):
        raise ContractViolation(f"{name} must be a complex number, got {value!r}") from None
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise ContractViolation(f"{name} must be finite")
    return z

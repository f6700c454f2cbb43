"""Input validation helpers shared across modules."""

import numbers

import numpy as np

from .exceptions import InvalidArgumentError


def check_int(value, name, minimum=None, maximum=None):
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise InvalidArgumentError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise InvalidArgumentError(f"{name} must be <= {maximum}, got {value}")
    return value


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def check_sequence(seq, name="sequence", allow_empty=False):
    """Return ``seq`` as a 1-D array, keeping integer dtype for integer input."""
    arr = np.asarray(seq)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise InvalidArgumentError(f"{name} must be nonempty")
    if arr.dtype == bool or not np.issubdtype(arr.dtype, np.number):
        raise InvalidArgumentError(f"{name} must be numeric")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return arr


def check_blocks(blocks, block_len=None, name="blocks"):
    """Validate a stack of sample blocks, returning a 2-D complex array."""
    arr = np.asarray(blocks)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidArgumentError(f"{name} must be a nonempty 2-D array, got shape {arr.shape}")
    if block_len is not None and arr.shape[1] != block_len:
        raise InvalidArgumentError(f"{name} must have blocks of length {block_len}, got {arr.shape[1]}")
    return arr.astype(np.complex128, copy=False)


def check_vector(vec, length, name):
    arr = np.asarray(vec)
    if arr.shape[-1:] != (length,):
        raise InvalidArgumentError(f"{name} must have trailing dimension {length}, got shape {arr.shape}")
    return arr

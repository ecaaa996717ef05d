from typing import Sequence, Union

import numpy as np

from snmix.errors import DomainError

# Useful types
Vector = Union[np.ndarray, Sequence[float]]

SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)
LOG_2 = np.log(2.0)
HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def as_data(data: Vector, min_size: int = 1) -> np.ndarray:
    """
    Validate a sample and return it as a contiguous float array.

    :param data: one-dimensional sequence of finite observations
    :param min_size: minimal number of observations
    :return: float64 array of shape (n,)
    """
    x = np.ascontiguousarray(data, dtype=float)
    if x.ndim != 1:
        raise DomainError(f"data must be one-dimensional, got shape {x.shape}")
    if x.size < min_size:
        raise DomainError(f"need at least {min_size} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("data contains non-finite values")
    return x


def relative_change(new: float, old: float) -> float:
    """Relative objective change used by every stopping rule."""
    return abs(new - old) / (abs(old) + 1.0)


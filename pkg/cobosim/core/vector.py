"""Dense float64 vectors."""

from typing import Iterable, Union

import numpy as np

from ..errors import UsageError

Vector = np.ndarray


def as_vector(values: Union[Iterable[float], np.ndarray]) -> Vector:
    """Build a 1-D float64 vector, rejecting NaN/Inf entries.

    Args:
        values: Sequence or array of real numbers

    Returns:
        New 1-D float64 array

    Raises:
        UsageError: If the input is not 1-D or has non-finite entries
    """
    vec = np.array(values, dtype=np.float64)
    if vec.ndim != 1:
        raise UsageError(f"Expected a 1-D vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise UsageError("Vector entries must be finite")
    return vec


def check_same_dim(u: Vector, v: Vector) -> None:
    if u.shape != v.shape:
        raise UsageError(f"Dimension mismatch: {u.shape[0]} vs {v.shape[0]}")


def dot(u: Vector, v: Vector) -> float:
    """Inner product of two equal-dimension vectors."""
    check_same_dim(u, v)
    return float(np.dot(u, v))


def sq_norm(u: Vector) -> float:
    return float(np.dot(u, u))

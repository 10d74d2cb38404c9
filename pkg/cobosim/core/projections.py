"""Euclidean projections onto the box [0, 1]^d and the probability simplex."""

import numpy as np

from ..errors import UsageError
from .vector import Vector


def project_box(v: Vector) -> Vector:
    """Clamp every entry into [0, 1]."""
    return np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)


def project_simplex(v: Vector) -> Vector:
    """Project onto {w >= 0, sum(w) = 1} with the sort-and-threshold rule.

    Entries are sorted in descending order (stable on ties); the largest
    index rho with ``u[rho] + (1 - sum(u[:rho+1])) / (rho+1) > 0`` fixes the
    shift applied to the top entries, the rest are zeroed.

    Args:
        v: Vector of dimension >= 1

    Returns:
        Projected vector, summing to 1

    Raises:
        UsageError: If v is empty
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise UsageError("project_simplex requires a non-empty 1-D vector")

    order = np.argsort(-v, kind="stable")
    u = v[order]
    cumulative = np.cumsum(u)
    ranks = np.arange(1, u.size + 1)
    positive = u + (1.0 - cumulative) / ranks > 0
    rho = int(np.nonzero(positive)[0][-1])
    shift = (1.0 - cumulative[rho]) / (rho + 1)

    w = np.maximum(v + shift, 0.0)
    # Clean up float drift so the sum is 1 to machine precision.
    total = w.sum()
    if total > 0:
        w /= total
    return w

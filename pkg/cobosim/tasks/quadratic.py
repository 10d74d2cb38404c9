"""Clustered quadratic tasks f(x) = (a/2)||x - mu||^2 with Gaussian gradient noise."""

import logging
from itertools import combinations
from typing import List, Tuple

import numpy as np

from ..core.vector import Vector, as_vector, check_same_dim
from ..errors import ConfigError, UsageError
from ..tools.rng import substream
from .base import GradientSample, Task
from .layout import ClusterLayout

logger = logging.getLogger(__name__)


class QuadraticTask(Task):
    """Quadratic loss with curvature ``a`` centred at ``mu``.

    The smoothness constant L equals ``a``. Stochastic gradients add
    isotropic Gaussian noise whose total second moment is noise_sigma^2 / b.
    """

    def __init__(self, a: float, mu, noise_sigma: float = 0.0):
        if not a > 0:
            raise ConfigError(f"curvature must be positive, got {a}")
        if noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {noise_sigma}")
        self.a = float(a)
        self.mu = as_vector(mu)
        self.mu.setflags(write=False)
        self.noise_sigma = float(noise_sigma)

    def __repr__(self) -> str:
        return f"QuadraticTask(a={self.a:.4g}, dim={self.dim}, noise_sigma={self.noise_sigma:.4g})"

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    @property
    def smoothness(self) -> float:
        return self.a

    def value_grad(self, x: Vector) -> Tuple[float, Vector]:
        return quad_value_grad(self, x)

    def stoch_grad(self, x: Vector, b: int, rng: np.random.Generator) -> GradientSample:
        return stoch_grad(self, x, b, rng)


def quad_value_grad(task: QuadraticTask, x: Vector) -> Tuple[float, Vector]:
    """Exact ((a/2)||x - mu||^2, a(x - mu))."""
    x = np.asarray(x, dtype=np.float64)
    check_same_dim(x, task.mu)
    diff = x - task.mu
    return 0.5 * task.a * float(np.dot(diff, diff)), task.a * diff


def stoch_grad(task: QuadraticTask, x: Vector, b: int, rng: np.random.Generator) -> GradientSample:
    """Exact gradient plus N(0, sigma^2/(b*d)) noise per coordinate.

    Args:
        task: Quadratic task
        x: Query point
        b: Mini-batch size (>= 1)
        rng: Stream supplying the noise

    Returns:
        GradientSample whose value is the exact loss
    """
    if b < 1:
        raise UsageError(f"batch size must be >= 1, got {b}")
    value, grad = quad_value_grad(task, x)
    if task.noise_sigma > 0:
        scale = task.noise_sigma / np.sqrt(b * task.dim)
        grad = grad + rng.normal(0.0, scale, size=task.dim)
    return GradientSample(value=value, grad=grad, batch_size=b)


def make_clustered_quadratics(
    K: int,
    c: int,
    d: int,
    a_range: Tuple[float, float],
    separation: float,
    sigma: float,
    seed: int,
) -> Tuple[List[QuadraticTask], ClusterLayout]:
    """Generate K clusters of c quadratic clients each.

    Cluster k is centred at ``separation * e_k`` plus a seeded jitter of norm
    separation/100; centres are rescaled if needed so every pair is at least
    ``separation`` apart. Curvatures are uniform on ``a_range``.

    Returns:
        (tasks, layout) with n = K*c tasks ordered cluster by cluster

    Raises:
        ConfigError: On invalid sizes or when d < K
    """
    low, high = float(a_range[0]), float(a_range[1])
    if K < 1 or c < 1 or d < 1:
        raise ConfigError(f"K, c and d must be >= 1, got K={K}, c={c}, d={d}")
    if not 0 < low <= high:
        raise ConfigError(f"a_range must satisfy 0 < low <= high, got {a_range}", key="task.a_range")
    if not separation > 0:
        raise ConfigError(f"separation must be positive, got {separation}", key="task.separation")
    if sigma < 0:
        raise ConfigError(f"sigma must be >= 0, got {sigma}", key="task.sigma")
    if d < K:
        raise ConfigError(
            f"cannot place {K} separated cluster centres along distinct axes in dimension {d} (need d >= K)",
            key="task.d",
        )

    rng = substream(seed, "quadratics")
    centers = np.zeros((K, d))
    for k in range(K):
        centers[k, k] = separation
        jitter = rng.normal(size=d)
        centers[k] += jitter / np.linalg.norm(jitter) * (separation / 100.0)

    if K > 1:
        min_dist = min(np.linalg.norm(centers[i] - centers[j]) for i, j in combinations(range(K), 2))
        if min_dist < separation:
            centers *= separation / min_dist

    curvatures = rng.uniform(low, high, size=K * c)
    layout = ClusterLayout.blocks(K, c)
    tasks = [
        QuadraticTask(curvatures[i], centers[layout.cluster_of(i)], sigma)
        for i in range(layout.n_clients)
    ]
    logger.debug("Generated %d quadratic tasks in %d clusters (d=%d)", len(tasks), K, d)
    return tasks, layout

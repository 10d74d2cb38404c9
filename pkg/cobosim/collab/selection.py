"""Client-selection pass: midpoint gradient alignment drives the weight updates."""

import logging
from itertools import combinations
from typing import Dict, List, Sequence

import numpy as np

from ..core.projections import project_simplex
from ..core.vector import Vector, sq_norm
from ..errors import UsageError
from ..tasks.base import Task
from ..tools.rng import substream
from .matrix import CollaborationMatrix, Mode
from .sampling import Pair, SamplingStrategy, sample_pairs

logger = logging.getLogger(__name__)


def midpoint_alignment(
    i: int,
    j: int,
    X: np.ndarray,
    tasks: Sequence[Task],
    b: int,
    rng: np.random.Generator,
) -> float:
    """<g_i(z), g_j(z)> at the midpoint z = (x_i + x_j)/2.

    The two stochastic gradients are consecutive independent draws from
    ``rng``, client i first.
    """
    if i == j:
        raise UsageError(f"midpoint_alignment needs two distinct clients, got i=j={i}")
    z = 0.5 * (X[i] + X[j])
    g_i = tasks[i].stoch_grad(z, b, rng).grad
    g_j = tasks[j].stoch_grad(z, b, rng).grad
    return float(np.dot(g_i, g_j))


def self_alignment(i: int, X: np.ndarray, tasks: Sequence[Task], b: int, rng: np.random.Generator) -> float:
    """||g_i(x_i)||^2, the diagonal entry's alignment in Simplex mode."""
    return sq_norm(tasks[i].stoch_grad(X[i], b, rng).grad)


def update_weight_box(w: float, alignment: float, gamma: float) -> float:
    return float(np.clip(w + gamma * alignment, 0.0, 1.0))


def update_row_simplex(row: Vector, alignments: Vector, gamma: float) -> Vector:
    row = np.asarray(row, dtype=np.float64)
    alignments = np.asarray(alignments, dtype=np.float64)
    if row.shape != alignments.shape:
        raise UsageError(f"row and alignments differ in shape: {row.shape} vs {alignments.shape}")
    return project_simplex(row + gamma * alignments)


def _pair_alignments(
    pairs: List[Pair], X: np.ndarray, tasks: Sequence[Task], b: int, seed: int, t: int,
) -> Dict[Pair, float]:
    return {
        (i, j): midpoint_alignment(i, j, X, tasks, b, substream(seed, "align", t, i, j))
        for i, j in pairs
    }


def client_selection_pass(
    X: np.ndarray,
    W: CollaborationMatrix,
    tasks: Sequence[Task],
    t: int,
    *,
    strategy: SamplingStrategy,
    gamma: float,
    b: int,
    T: int,
    seed: int,
) -> CollaborationMatrix:
    """Return W^{t+1} computed from the frozen models X^t.

    Box mode evaluates each sampled unordered pair once and writes both
    w_ij and w_ji. Simplex mode reuses that alignment for both rows; a row
    with at least one sampled column also gets its self alignment and is
    re-projected, unsampled columns contributing zero.
    """
    n = W.n
    if n < 2:
        return W.copy()

    pairs = sample_pairs(strategy, t, n, T, substream(seed, "pairs", t))
    updated = W.copy()
    if not pairs:
        return updated

    alignments = _pair_alignments(pairs, X, tasks, b, seed, t)
    if W.mode is Mode.BOX:
        for (i, j), value in alignments.items():
            w = update_weight_box(W.entries[i, j], value, gamma)
            updated.entries[i, j] = w
            updated.entries[j, i] = w
    else:
        step = np.zeros((n, n))
        touched = np.zeros(n, dtype=bool)
        for (i, j), value in alignments.items():
            step[i, j] = step[j, i] = value
            touched[i] = touched[j] = True
        for i in np.flatnonzero(touched):
            step[i, i] = self_alignment(i, X, tasks, b, substream(seed, "self", t, i))
            updated.entries[i] = update_row_simplex(W.entries[i], step[i], gamma)

    logger.debug("Round %d: updated %d of %d pairs", t, len(pairs), n * (n - 1) // 2)
    return updated


def calibrate_gamma(X: np.ndarray, tasks: Sequence[Task], b: int, seed: int, fallback: float) -> float:
    """gamma = 1 / (2 * mean |alignment|) over one full pass of all pairs at X.

    Returns ``fallback`` when there are no pairs or every alignment is zero.
    """
    n = len(tasks)
    values = [
        abs(midpoint_alignment(i, j, X, tasks, b, substream(seed, "gamma", i, j)))
        for i, j in combinations(range(n), 2)
    ]
    mean_abs = float(np.mean(values)) if values else 0.0
    if mean_abs <= 0.0:
        logger.warning("Gamma calibration saw no nonzero alignment; keeping gamma=%g", fallback)
        return fallback
    gamma = 1.0 / (2.0 * mean_abs)
    logger.info("Calibrated gamma=%.4g from mean |alignment|=%.4g over %d pairs", gamma, mean_abs, len(values))
    return gamma

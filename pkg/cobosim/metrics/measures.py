"""Per-round measurements of a training trajectory."""

import math
from dataclasses import asdict, dataclass
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..collab.matrix import CollaborationMatrix, Mode
from ..errors import NotApplicableError, UsageError
from ..tasks.base import Task
from ..tasks.classification import ClassificationTask
from ..tasks.layout import ClusterLayout

RECOVERY_THRESHOLD = 0.5


@dataclass(frozen=True)
class MetricsRecord:
    """Everything measured after round ``round`` (round 0 is the initial state).

    Attributes:
        round: Number of completed rounds
        per_client_loss: Exact training loss f_i(x_i)
        per_client_grad_norm_sq: ||grad f_i(x_i)||^2 with the exact gradient
        per_cluster_consensus: consensus_distance of each ground-truth cluster
        per_cluster_pair_grad_norm: pair_grad_norm_avg of each cluster
        pair_grad_norm_avg: Mean of per_cluster_pair_grad_norm
        recovery_error: Block-structure error of W, None when not measured
        accuracy: Holdout accuracy per client, classification only
        eval_loss: Holdout loss per client, classification only
    """

    round: int
    per_client_loss: List[float]
    per_client_grad_norm_sq: List[float]
    per_cluster_consensus: List[float]
    per_cluster_pair_grad_norm: List[float]
    pair_grad_norm_avg: float
    recovery_error: Optional[float] = None
    accuracy: Optional[List[float]] = None
    eval_loss: Optional[List[float]] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def consensus_distance(X: np.ndarray, cluster: Sequence[int]) -> float:
    """(1/c^2) sum over ordered pairs i, j in the cluster of ||x_i - x_j||^2."""
    if len(cluster) == 0:
        raise UsageError("consensus_distance needs a non-empty cluster")
    models = X[list(cluster)]
    diffs = models[:, None, :] - models[None, :, :]
    return float(np.sum(diffs * diffs)) / len(cluster) ** 2


def pair_grad_norm_avg(
    X: np.ndarray,
    cluster: Sequence[int],
    tasks: Sequence[Task],
    own_grad_norms: Optional[Dict[int, float]] = None,
) -> float:
    """(1/c^2) sum over ordered pairs of ||(grad f_i(z_ij) + grad f_j(z_ij)) / 2||^2, z_ij the midpoint.

    The (i, j) and (j, i) terms coincide and the (i, i) term is ||grad f_i(x_i)||^2,
    so only unordered pairs are evaluated. ``own_grad_norms`` maps a client to an
    already computed ||grad f_i(x_i)||^2.
    """
    if len(cluster) == 0:
        raise UsageError("pair_grad_norm_avg needs a non-empty cluster")
    own_grad_norms = own_grad_norms or {}
    total = 0.0
    for i in cluster:
        if i in own_grad_norms:
            total += own_grad_norms[i]
        else:
            g = tasks[i].grad(X[i])
            total += float(np.dot(g, g))
    for i, j in combinations(cluster, 2):
        z = 0.5 * (X[i] + X[j])
        g = 0.5 * (tasks[i].grad(z) + tasks[j].grad(z))
        total += 2.0 * float(np.dot(g, g))
    return total / len(cluster) ** 2


def recovery_error(W: CollaborationMatrix, layout: ClusterLayout, threshold: float = RECOVERY_THRESHOLD) -> float:
    """Fraction of off-diagonal entries on the wrong side of ``threshold``.

    Same-cluster entries should be >= threshold and cross-cluster entries below it.

    Raises:
        NotApplicableError: For Simplex-mode matrices
    """
    if W.mode is not Mode.BOX:
        raise NotApplicableError("recovery_error is defined for Box-mode weights only")
    n = W.n
    if n != layout.n_clients:
        raise UsageError(f"W has {n} clients but the layout has {layout.n_clients}")
    if n < 2:
        return 0.0
    clusters = np.asarray(layout.assignment)
    same = clusters[:, None] == clusters[None, :]
    linked = W.entries >= threshold
    wrong = (same != linked) & ~np.eye(n, dtype=bool)
    return float(wrong.sum()) / (n * (n - 1))


def improved_fraction(final_losses: Sequence[float], local_baseline_losses: Sequence[float]) -> float:
    """Share of clients whose final loss is strictly below their local-training loss."""
    if len(final_losses) != len(local_baseline_losses):
        raise UsageError(
            f"loss lists differ in length: {len(final_losses)} vs {len(local_baseline_losses)}"
        )
    if not final_losses:
        raise UsageError("improved_fraction needs at least one client")
    better = sum(1 for mine, local in zip(final_losses, local_baseline_losses) if mine < local)
    return better / len(final_losses)


def collect_metrics(
    t: int,
    X: np.ndarray,
    tasks: Sequence[Task],
    layout: ClusterLayout,
    W: Optional[CollaborationMatrix] = None,
) -> MetricsRecord:
    """Measure the state after ``t`` rounds; recovery error is recorded for Box-mode W only."""
    losses, grad_norms = [], []
    for i, task in enumerate(tasks):
        value, grad = task.value_grad(X[i])
        losses.append(value)
        grad_norms.append(float(np.dot(grad, grad)))

    consensus = [consensus_distance(X, layout.members(k)) for k in range(layout.n_clusters)]
    own = dict(enumerate(grad_norms))
    pair_norms = [pair_grad_norm_avg(X, layout.members(k), tasks, own) for k in range(layout.n_clusters)]

    accuracy = eval_loss = None
    if all(isinstance(task, ClassificationTask) for task in tasks):
        holdout = [task.holdout_metrics(X[i]) for i, task in enumerate(tasks)]
        eval_loss = [loss for loss, _ in holdout]
        accuracy = [acc for _, acc in holdout]

    recovery = None
    if W is not None and W.mode is Mode.BOX:
        recovery = recovery_error(W, layout)

    return MetricsRecord(
        round=t,
        per_client_loss=losses,
        per_client_grad_norm_sq=grad_norms,
        per_cluster_consensus=consensus,
        per_cluster_pair_grad_norm=pair_norms,
        pair_grad_norm_avg=float(np.mean(pair_norms)),
        recovery_error=recovery,
        accuracy=accuracy,
        eval_loss=eval_loss,
    )


def tail_records(records: Sequence[MetricsRecord], tail_fraction: float) -> List[MetricsRecord]:
    """The last ceil(tail_fraction * T) records after round 0 (just round 0 when T = 0)."""
    trained = [r for r in records if r.round > 0]
    if not trained:
        return list(records[-1:])
    count = max(1, math.ceil(tail_fraction * len(trained)))
    return trained[-count:]


def final_losses(records: Sequence[MetricsRecord], tail_fraction: float, holdout: bool = False) -> List[float]:
    """Per-client loss averaged over the tail of the run.

    With ``holdout`` the holdout loss is used when recorded, else the training loss.
    """
    tail = tail_records(records, tail_fraction)
    use_holdout = holdout and tail[0].eval_loss is not None
    rows = [r.eval_loss if use_holdout else r.per_client_loss for r in tail]
    return np.mean(np.asarray(rows, dtype=np.float64), axis=0).tolist()


def final_accuracy(records: Sequence[MetricsRecord], tail_fraction: float) -> Optional[List[float]]:
    tail = tail_records(records, tail_fraction)
    if tail[0].accuracy is None:
        return None
    return np.mean(np.asarray([r.accuracy for r in tail]), axis=0).tolist()


def settled_recovery_round(records: Sequence[MetricsRecord]) -> Optional[int]:
    """Earliest round from which recovery_error stays 0 to the end, or None."""
    first = None
    for record in records:
        if record.recovery_error is None:
            return None
        if record.recovery_error == 0.0:
            if first is None:
                first = record.round
        else:
            first = None
    return first


def ema_weights(snapshots: Sequence[Dict[str, Any]], client: int, beta: float = 0.9) -> np.ndarray:
    """Exponential moving average of one client's weight row across snapshots.

    Args:
        snapshots: W snapshots in the to_json layout, ordered by round
        client: Row to smooth
        beta: Smoothing factor in [0, 1); 0 returns the raw rows

    Returns:
        (n_snapshots, n) array whose first row is the first raw row
    """
    if not 0.0 <= beta < 1.0:
        raise UsageError(f"beta must lie in [0, 1), got {beta}")
    if not snapshots:
        raise UsageError("ema_weights needs at least one snapshot")
    rows = np.asarray([
        np.asarray(s["entries"], dtype=np.float64).reshape(s["n"], s["n"])[client] for s in snapshots
    ])
    smoothed = np.empty_like(rows)
    smoothed[0] = rows[0]
    for k in range(1, len(rows)):
        smoothed[k] = beta * smoothed[k - 1] + (1.0 - beta) * rows[k]
    return smoothed

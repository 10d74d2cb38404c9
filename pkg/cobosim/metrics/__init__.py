"""Trajectory measurements and convergence-bound evaluation."""

from .measures import (
    MetricsRecord,
    collect_metrics,
    consensus_distance,
    ema_weights,
    final_accuracy,
    final_losses,
    improved_fraction,
    pair_grad_norm_avg,
    recovery_error,
    settled_recovery_round,
)
from .theory import (
    ClusterBound,
    Condition,
    PairConstants,
    TheoryReport,
    collaborativeness_constants,
    measure_lhs,
    theorem_bounds,
)

__all__ = [
    'MetricsRecord',
    'collect_metrics',
    'consensus_distance',
    'ema_weights',
    'final_accuracy',
    'final_losses',
    'improved_fraction',
    'pair_grad_norm_avg',
    'recovery_error',
    'settled_recovery_round',
    'ClusterBound',
    'Condition',
    'PairConstants',
    'TheoryReport',
    'collaborativeness_constants',
    'measure_lhs',
    'theorem_bounds',
]

"""Synthetic task families with exact and stochastic gradient oracles."""

from .base import GradientSample, Task
from .layout import ClusterLayout
from .quadratic import QuadraticTask, make_clustered_quadratics, quad_value_grad, stoch_grad
from .classification import (
    ClassificationTask,
    cluster_permutations,
    eval_accuracy,
    make_label_permuted_classification,
    softmax_value_grad,
)

__all__ = [
    'GradientSample',
    'Task',
    'ClusterLayout',
    'QuadraticTask',
    'make_clustered_quadratics',
    'quad_value_grad',
    'stoch_grad',
    'ClassificationTask',
    'cluster_permutations',
    'eval_accuracy',
    'make_label_permuted_classification',
    'softmax_value_grad',
]

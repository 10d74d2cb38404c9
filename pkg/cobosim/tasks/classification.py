"""Label-permuted synthetic classification with a linear softmax model.

All clients draw features from one shared Gaussian mixture; each cluster
relabels the classes with its own permutation, so clients in different
clusters disagree on the label of every class.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from ..core.vector import Vector
from ..errors import ConfigError, UsageError
from ..tools.rng import substream
from .base import GradientSample, Task
from .layout import ClusterLayout

logger = logging.getLogger(__name__)

Batch = Tuple[np.ndarray, np.ndarray]


def _augment(features: np.ndarray) -> np.ndarray:
    """Append the bias column of ones."""
    return np.hstack([features, np.ones((features.shape[0], 1))])


def _logits(params: Vector, features: np.ndarray, n_classes: int) -> np.ndarray:
    weights = np.asarray(params, dtype=np.float64).reshape(n_classes, features.shape[1] + 1)
    return _augment(features) @ weights.T


class ClassificationTask(Task):
    """One client's data under its cluster's label permutation.

    Parameters are a flat vector of size n_classes * (d + 1): row c of the
    (n_classes, d + 1) weight matrix holds the class-c weights with the bias last.
    """

    def __init__(
        self,
        features: np.ndarray,
        labels: np.ndarray,
        label_perm: np.ndarray,
        n_classes: int,
        holdout_features: np.ndarray,
        holdout_labels: np.ndarray,
    ):
        self.features = np.asarray(features, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.label_perm = np.asarray(label_perm, dtype=np.int64)
        self.n_classes = int(n_classes)
        self.holdout_features = np.asarray(holdout_features, dtype=np.float64)
        self.holdout_labels = np.asarray(holdout_labels, dtype=np.int64)
        for arr in (self.features, self.labels, self.label_perm, self.holdout_features, self.holdout_labels):
            arr.setflags(write=False)

    def __repr__(self) -> str:
        return (
            f"ClassificationTask(n_samples={len(self.labels)}, n_holdout={len(self.holdout_labels)}, "
            f"n_classes={self.n_classes}, feature_dim={self.feature_dim})"
        )

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def dim(self) -> int:
        return self.n_classes * (self.feature_dim + 1)

    def value_grad(self, x: Vector) -> Tuple[float, Vector]:
        return softmax_value_grad(self, x, (self.features, self.labels))

    def stoch_grad(self, x: Vector, b: int, rng: np.random.Generator) -> GradientSample:
        if b < 1:
            raise UsageError(f"batch size must be >= 1, got {b}")
        idx = rng.integers(0, len(self.labels), size=b)
        value, grad = softmax_value_grad(self, x, (self.features[idx], self.labels[idx]))
        return GradientSample(value=value, grad=grad, batch_size=b)

    def eval_loss(self, x: Vector) -> float:
        return softmax_value_grad(self, x, (self.holdout_features, self.holdout_labels))[0]

    def holdout_metrics(self, x: Vector) -> Tuple[float, float]:
        """(holdout loss, holdout accuracy) from a single pass over the holdout set."""
        if len(self.holdout_labels) == 0:
            raise UsageError("holdout_metrics requires a non-empty holdout set")
        logits = _logits(x, self.holdout_features, self.n_classes)
        accuracy = float(np.mean(np.argmax(logits, axis=1) == self.holdout_labels))
        logits -= logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(logits).sum(axis=1))
        loss = float(np.mean(log_norm - logits[np.arange(len(self.holdout_labels)), self.holdout_labels]))
        return loss, accuracy


def softmax_value_grad(task: ClassificationTask, params: Vector, batch: Batch) -> Tuple[float, Vector]:
    """Mean cross-entropy of a linear softmax classifier and its exact gradient.

    Args:
        task: Supplies n_classes and the feature dimension
        params: Flat parameter vector of size n_classes * (d + 1)
        batch: (features, labels) arrays

    Returns:
        (loss, gradient) with the gradient flattened like ``params``

    Raises:
        UsageError: On an empty batch or a wrongly sized parameter vector
    """
    features, labels = batch
    if len(labels) == 0:
        raise UsageError("softmax_value_grad requires a non-empty batch")
    if np.asarray(params).shape != (task.dim,):
        raise UsageError(f"params must have dimension {task.dim}, got {np.asarray(params).shape}")

    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    m = len(labels)
    logits = _logits(params, features, task.n_classes)
    logits -= logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(logits).sum(axis=1))
    loss = float(np.mean(log_norm - logits[np.arange(m), labels]))

    probs = np.exp(logits - log_norm[:, None])
    probs[np.arange(m), labels] -= 1.0
    grad = (probs.T @ _augment(features)) / m
    return loss, grad.ravel()


def eval_accuracy(task: ClassificationTask, params: Vector) -> float:
    """Fraction of holdout samples whose argmax class equals the permuted label.

    Ties go to the lowest class index.
    """
    if len(task.holdout_labels) == 0:
        raise UsageError("eval_accuracy requires a non-empty holdout set")
    predictions = np.argmax(_logits(params, task.holdout_features, task.n_classes), axis=1)
    return float(np.mean(predictions == task.holdout_labels))


def cluster_permutations(K: int, n_classes: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Permutations pi_0 = identity, pi_k = s o shift_k o s^-1 for a random relabeling s.

    For k != k' the permutations differ on every class as long as K <= n_classes.
    """
    if K > n_classes:
        raise ConfigError(
            f"cannot build {K} class-wise distinct label permutations with only {n_classes} classes",
            key="task.K",
        )
    relabel = rng.permutation(n_classes)
    inverse = np.argsort(relabel)
    classes = np.arange(n_classes)
    return [relabel[(inverse[classes] + k) % n_classes] for k in range(K)]


def make_label_permuted_classification(
    K: int,
    c: int,
    d: int,
    n_classes: int,
    n_per_client: int,
    seed: int,
    class_sep: float = 0.75,
    n_holdout: Optional[int] = None,
) -> Tuple[List[ClassificationTask], ClusterLayout]:
    """Generate K clusters of c clients sharing one Gaussian mixture.

    Class means are N(0, class_sep^2 I) and features add unit Gaussian noise.
    Each cluster draws a pool of c * n_per_client samples (and a holdout pool),
    relabels it with its permutation and splits it uniformly at random among
    its clients.

    Raises:
        ConfigError: On invalid sizes or K > n_classes
    """
    if n_classes < 2:
        raise ConfigError(f"n_classes must be >= 2, got {n_classes}", key="task.n_classes")
    if K < 1 or c < 1 or d < 1:
        raise ConfigError(f"K, c and d must be >= 1, got K={K}, c={c}, d={d}")
    if n_per_client < 1:
        raise ConfigError(f"n_per_client must be >= 1, got {n_per_client}", key="task.n_per_client")
    if n_holdout is None:
        n_holdout = max(1, n_per_client // 5)

    rng = substream(seed, "classification")
    permutations = cluster_permutations(K, n_classes, rng)
    means = rng.normal(0.0, class_sep, size=(n_classes, d))

    def draw(count: int) -> Batch:
        classes = rng.integers(0, n_classes, size=count)
        return means[classes] + rng.normal(size=(count, d)), classes

    layout = ClusterLayout.blocks(K, c)
    tasks: List[ClassificationTask] = []
    for k in range(K):
        train_x, train_y = draw(c * n_per_client)
        test_x, test_y = draw(c * n_holdout)
        train_split = np.array_split(rng.permutation(len(train_y)), c)
        test_split = np.array_split(rng.permutation(len(test_y)), c)
        perm = permutations[k]
        for train_idx, test_idx in zip(train_split, test_split):
            tasks.append(ClassificationTask(
                features=train_x[train_idx],
                labels=perm[train_y[train_idx]],
                label_perm=perm,
                n_classes=n_classes,
                holdout_features=test_x[test_idx],
                holdout_labels=perm[test_y[test_idx]],
            ))
    logger.debug("Generated %d classification tasks in %d clusters (%d classes)", len(tasks), K, n_classes)
    return tasks, layout

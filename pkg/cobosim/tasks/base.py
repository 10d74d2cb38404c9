"""Base task class."""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..core.vector import Vector


@dataclass(frozen=True, eq=False)
class GradientSample:
    """One stochastic oracle call: mini-batch loss and gradient."""

    value: float
    grad: Vector
    batch_size: int


class Task(ABC):
    """A client objective f_i with exact and stochastic gradient oracles."""

    @property
    @abstractmethod
    def dim(self) -> int:
        """Dimension of the model vector this task expects."""

    @abstractmethod
    def value_grad(self, x: Vector) -> Tuple[float, Vector]:
        """Exact loss and gradient at x."""

    @abstractmethod
    def stoch_grad(self, x: Vector, b: int, rng: np.random.Generator) -> GradientSample:
        """Unbiased mini-batch gradient at x with batch size b."""

    def loss(self, x: Vector) -> float:
        return self.value_grad(x)[0]

    def grad(self, x: Vector) -> Vector:
        return self.value_grad(x)[1]

    def eval_loss(self, x: Vector) -> float:
        """Loss on held-out data; tasks without a holdout report the exact loss."""
        return self.loss(x)

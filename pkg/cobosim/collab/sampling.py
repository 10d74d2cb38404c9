"""Pair-sampling strategies for the client-selection pass."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from ..errors import ConfigError

Pair = Tuple[int, int]

# The mixed strategy samples at the constant rate for this share of the rounds.
DEFAULT_SWITCH_FRACTION = 0.002


class SamplingKind(str, Enum):
    EVERY_PAIR = "every_pair"
    CONSTANT = "constant"
    TIME_DEPENDENT = "time_dependent"
    MIXED = "mixed"


@dataclass(frozen=True)
class SamplingStrategy:
    """Which unordered pairs update their weight in round t.

    Attributes:
        kind: Strategy tag
        p: Constant per-pair probability; None means 1/n
        c0: Time-dependent numerator, probability min(1, c0/(t+1)); None means
            T * (1/n) * switch_fraction * e
        switch_fraction: Share of rounds the mixed strategy samples at the constant rate
    """

    kind: SamplingKind = SamplingKind.EVERY_PAIR
    p: Optional[float] = None
    c0: Optional[float] = None
    switch_fraction: float = DEFAULT_SWITCH_FRACTION

    def __post_init__(self):
        object.__setattr__(self, "kind", SamplingKind(self.kind))
        if self.p is not None and not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p must be a probability, got {self.p}", key="train.strategy.p")
        if self.c0 is not None and not self.c0 > 0:
            raise ConfigError(f"c0 must be positive, got {self.c0}", key="train.strategy.c0")
        if not 0.0 < self.switch_fraction < 1.0:
            raise ConfigError(
                f"switch_fraction must lie in (0, 1), got {self.switch_fraction}",
                key="train.strategy.switch_fraction",
            )

    def constant_p(self, n: int) -> float:
        return self.p if self.p is not None else 1.0 / n

    def time_c0(self, n: int, T: int) -> float:
        if self.c0 is not None:
            return self.c0
        return T * (1.0 / n) * self.switch_fraction * math.e

    def probability(self, t: int, n: int, T: int) -> float:
        """Per-pair inclusion probability at round t."""
        if self.kind is SamplingKind.EVERY_PAIR:
            return 1.0
        if self.kind is SamplingKind.CONSTANT:
            return self.constant_p(n)
        if self.kind is SamplingKind.MIXED and t < self.switch_fraction * T:
            return 1.0 / n
        return min(1.0, self.time_c0(n, T) / (t + 1))


def sample_pairs(strategy: SamplingStrategy, t: int, n: int, T: int, rng: np.random.Generator) -> List[Pair]:
    """Draw the unordered pairs (i < j) updated in round t.

    Each pair is included independently with ``strategy.probability(t, n, T)``;
    pass the round's own stream so results do not depend on earlier rounds.
    """
    rows, cols = np.triu_indices(n, k=1)
    if strategy.kind is SamplingKind.EVERY_PAIR:
        return list(zip(rows.tolist(), cols.tolist()))
    keep = rng.random(rows.size) < strategy.probability(t, n, T)
    return list(zip(rows[keep].tolist(), cols[keep].tolist()))

"""Labelled, counter-keyed random streams.

Every random draw in a run comes from ``substream(seed, label, *keys)``. The
stream depends only on its key tuple, never on how many draws were made
elsewhere, so sampling the same (round, client, pair) always yields the same
numbers regardless of execution order.
"""

import hashlib
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _label_key(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(seed: int, label: str, *keys: int) -> np.random.Generator:
    """Create the generator for one labelled stream.

    Args:
        seed: Non-negative experiment seed
        label: Stream family name (e.g. "model", "align", "pairs")
        *keys: Non-negative integer counters (round, client ids, ...)

    Returns:
        Fresh numpy Generator, bit-identical for identical arguments
    """
    entropy = [int(seed), _label_key(label)] + [int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))

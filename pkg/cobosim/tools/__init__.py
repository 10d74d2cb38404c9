"""Random streams and run execution helpers."""

from .executor import run_parallel
from .rng import substream

__all__ = [
    'run_parallel',
    'substream',
]

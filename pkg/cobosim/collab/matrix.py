"""Collaboration matrix W with box-symmetric or row-simplex semantics."""

from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from ..errors import UsageError


class Mode(str, Enum):
    BOX = "box"
    SIMPLEX = "simplex"


class CollaborationMatrix:
    """n x n collaboration weights.

    Box mode: entries in [0, 1], symmetric, initialised to all ones.
    Simplex mode: each row lies on the probability simplex, initialised uniform.
    Diagonal entries are stored but never move a model (x_i - x_i = 0).
    """

    ROW_SUM_TOL = 1e-9

    def __init__(self, entries: np.ndarray, mode: Mode):
        entries = np.array(entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise UsageError(f"Collaboration matrix must be square, got shape {entries.shape}")
        self.mode = Mode(mode)
        self.entries = entries

    @classmethod
    def initial(cls, n: int, mode: Mode) -> "CollaborationMatrix":
        if n < 1:
            raise UsageError(f"Need at least one client, got n={n}")
        mode = Mode(mode)
        if mode is Mode.BOX:
            return cls(np.ones((n, n)), mode)
        return cls(np.full((n, n), 1.0 / n), mode)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def copy(self) -> "CollaborationMatrix":
        return CollaborationMatrix(self.entries.copy(), self.mode)

    def check(self) -> None:
        """Raise UsageError if the mode's invariants are violated."""
        w = self.entries
        if not np.all(np.isfinite(w)):
            raise UsageError("Collaboration matrix has non-finite entries")
        if self.mode is Mode.BOX:
            if w.min() < 0.0 or w.max() > 1.0:
                raise UsageError("Box-mode weights must lie in [0, 1]")
            if not np.array_equal(w, w.T):
                raise UsageError("Box-mode weights must be symmetric")
        else:
            if w.min() < 0.0:
                raise UsageError("Simplex-mode weights must be nonnegative")
            if np.max(np.abs(w.sum(axis=1) - 1.0)) > self.ROW_SUM_TOL:
                raise UsageError("Simplex-mode rows must sum to 1")

    def to_json(self, round_index: Optional[int] = None) -> Dict[str, Any]:
        """Snapshot in the {round, mode, n, entries} layout (row-major entries)."""
        return {
            "round": round_index,
            "mode": self.mode.value,
            "n": self.n,
            "entries": self.entries.ravel().tolist(),
        }

    @classmethod
    def from_json(cls, payload: Dict[str, Any]) -> "CollaborationMatrix":
        n = int(payload["n"])
        entries = np.asarray(payload["entries"], dtype=np.float64).reshape(n, n)
        return cls(entries, Mode(payload["mode"]))

"""One training round of CoBo and of each baseline.

Every round reads a frozen snapshot of the models and returns a new state.
Client i's stochastic gradient at its own model in round t always comes from
the stream (seed, "model", t, i), so algorithms that reduce to one another
produce bit-identical trajectories.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..collab.matrix import CollaborationMatrix
from ..collab.selection import client_selection_pass
from ..config.manager import TrainConfig
from ..errors import UsageError
from ..tasks.base import Task
from ..tasks.layout import ClusterLayout
from ..tools.rng import substream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainerState:
    """Client models X (one row per client), weights W and the round counter t."""

    X: np.ndarray
    W: CollaborationMatrix
    t: int = 0

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def advance(self, X: np.ndarray, W: Optional[CollaborationMatrix] = None) -> "TrainerState":
        return TrainerState(X=X, W=self.W if W is None else W, t=self.t + 1)


def initial_model(dim: int, cfg: TrainConfig) -> np.ndarray:
    """Common starting point x^0: zero, or Gaussian with std init_scale."""
    if cfg.init_scale == 0:
        return np.zeros(dim)
    return cfg.init_scale * substream(cfg.seed, "init").normal(size=dim)


def initial_state(tasks: Sequence[Task], cfg: TrainConfig) -> TrainerState:
    dims = {task.dim for task in tasks}
    if len(dims) != 1:
        raise UsageError(f"All tasks must share one model dimension, got {sorted(dims)}")
    x0 = initial_model(dims.pop(), cfg)
    X = np.tile(x0, (len(tasks), 1))
    return TrainerState(X=X, W=CollaborationMatrix.initial(len(tasks), cfg.mode), t=0)


def client_gradients(X: np.ndarray, tasks: Sequence[Task], cfg: TrainConfig, t: int) -> np.ndarray:
    """Row i is g_i evaluated at X[i] from the stream (seed, "model", t, i)."""
    return np.stack([
        task.stoch_grad(X[i], cfg.b, substream(cfg.seed, "model", t, i)).grad
        for i, task in enumerate(tasks)
    ])


def model_step(X: np.ndarray, W: CollaborationMatrix, tasks: Sequence[Task], cfg: TrainConfig, t: int) -> np.ndarray:
    """x_i <- x_i - eta * (g_i + rho * sum_k w_ik (x_i - x_k)) for every client at once."""
    grads = client_gradients(X, tasks, cfg, t)
    weights = W.entries
    penalty = weights.sum(axis=1)[:, None] * X - weights @ X
    return X - cfg.eta * (grads + cfg.rho * penalty)


def outer_objective(X: np.ndarray, W: CollaborationMatrix, tasks: Sequence[Task], rho: float) -> float:
    """sum_i f_i(x_i) + (rho/2) sum_{i<j} w_ij ||x_i - x_j||^2.

    Its gradient in x_i is the drift of ``model_step`` for symmetric W.
    """
    total = sum(task.loss(X[i]) for i, task in enumerate(tasks))
    n = X.shape[0]
    for i in range(n):
        diffs = X[i + 1:] - X[i]
        total += 0.5 * rho * float(np.dot(W.entries[i, i + 1:], np.einsum("kd,kd->k", diffs, diffs)))
    return total


def cobo_round(state: TrainerState, tasks: Sequence[Task], cfg: TrainConfig) -> TrainerState:
    """Update W from the frozen X^t, then every x_i using W^{t+1} and X^t."""
    W_next = client_selection_pass(
        state.X, state.W, tasks, state.t,
        strategy=cfg.strategy, gamma=cfg.gamma, b=cfg.b, T=cfg.T, seed=cfg.seed,
    )
    return state.advance(model_step(state.X, W_next, tasks, cfg, state.t), W_next)


def local_round(state: TrainerState, tasks: Sequence[Task], cfg: TrainConfig) -> TrainerState:
    grads = client_gradients(state.X, tasks, cfg, state.t)
    return state.advance(state.X - cfg.eta * grads)


def _averaged_step(x: np.ndarray, members: Sequence[int], tasks: Sequence[Task], cfg: TrainConfig, t: int) -> np.ndarray:
    grads = np.stack([
        tasks[i].stoch_grad(x, cfg.b, substream(cfg.seed, "model", t, i)).grad for i in members
    ])
    return x - cfg.eta * grads.mean(axis=0)


def fedavg_round(state: TrainerState, tasks: Sequence[Task], cfg: TrainConfig) -> TrainerState:
    """One synchronized global step on the average objective; all clients hold the result."""
    shared = _averaged_step(state.X[0], range(state.n), tasks, cfg, state.t)
    return state.advance(np.tile(shared, (state.n, 1)))


def finetune_fedavg(state: TrainerState, tasks: Sequence[Task], cfg: TrainConfig) -> TrainerState:
    """FedAvg for the first finetune_rounds() rounds, local steps from the shared model afterwards."""
    if state.t < cfg.finetune_rounds():
        return fedavg_round(state, tasks, cfg)
    return local_round(state, tasks, cfg)


def ditto_round(
    state: TrainerState, global_model: np.ndarray, tasks: Sequence[Task], cfg: TrainConfig,
) -> Tuple[TrainerState, np.ndarray]:
    """Advance the global FedAvg model and the lambda-regularized personal models together."""
    t = state.t
    global_grads = np.stack([
        task.stoch_grad(global_model, cfg.b, substream(cfg.seed, "global", t, i)).grad
        for i, task in enumerate(tasks)
    ])
    next_global = global_model - cfg.eta * global_grads.mean(axis=0)

    grads = client_gradients(state.X, tasks, cfg, t)
    X = state.X - cfg.eta * (grads + cfg.ditto_lambda * (state.X - global_model))
    return state.advance(X), next_global


def initial_centers(x0: np.ndarray, k: int, cfg: TrainConfig) -> np.ndarray:
    """k IFCA cluster models drawn around x0 with std ifca_init_scale."""
    if cfg.ifca_init_scale == 0:
        return np.tile(x0, (k, 1))
    noise = substream(cfg.seed, "ifca_init").normal(size=(k, x0.shape[0]))
    return x0 + cfg.ifca_init_scale * noise


def ifca_assign(centers: np.ndarray, tasks: Sequence[Task], cfg: TrainConfig, t: int) -> List[int]:
    """Index of the center with the lowest fresh-batch loss per client (ties to the lowest index)."""
    choices = []
    for i, task in enumerate(tasks):
        rng = substream(cfg.seed, "ifca", t, i)
        losses = [task.stoch_grad(center, cfg.b, rng).value for center in centers]
        choices.append(int(np.argmin(losses)))
    return choices


def ifca_round(
    state: TrainerState, centers: np.ndarray, tasks: Sequence[Task], cfg: TrainConfig,
) -> Tuple[TrainerState, np.ndarray]:
    """Clients adopt their best center; each adopted center takes its adopters' average step."""
    choices = ifca_assign(centers, tasks, cfg, state.t)
    next_centers = centers.copy()
    for k in sorted(set(choices)):
        adopters = [i for i, choice in enumerate(choices) if choice == k]
        next_centers[k] = _averaged_step(centers[k], adopters, tasks, cfg, state.t)
    X = next_centers[choices]
    logger.debug("Round %d: IFCA center usage %s", state.t, np.bincount(choices, minlength=len(centers)).tolist())
    return state.advance(X), next_centers


def oracle_round(state: TrainerState, layout: ClusterLayout, tasks: Sequence[Task], cfg: TrainConfig) -> TrainerState:
    """FedAvg run separately inside each ground-truth cluster."""
    X = state.X.copy()
    for k in range(layout.n_clusters):
        members = layout.members(k)
        X[list(members)] = _averaged_step(state.X[members[0]], members, tasks, cfg, state.t)
    return state.advance(X)

"""Full-run driver: initialise, run T rounds, record metrics and W snapshots."""

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..collab.selection import calibrate_gamma
from ..config.manager import Algorithm, ExperimentConfig, TaskConfig, TaskKind, TrainConfig
from ..errors import UsageError
from ..metrics.measures import MetricsRecord, collect_metrics
from ..tasks.base import Task
from ..tasks.classification import make_label_permuted_classification
from ..tasks.layout import ClusterLayout
from ..tasks.quadratic import make_clustered_quadratics
from ..tools.executor import run_parallel
from ..tools.rng import substream
from .rounds import (
    TrainerState,
    cobo_round,
    ditto_round,
    fedavg_round,
    finetune_fedavg,
    ifca_round,
    initial_centers,
    initial_state,
    local_round,
    oracle_round,
)

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    """Trajectory of one algorithm run.

    Attributes:
        algorithm: Algorithm that produced the run
        records: One MetricsRecord per round, round 0 first
        snapshots: W snapshots (to_json layout) by round, CoBo only
        final_state: State after round T
        gamma: Weight step size actually used
        output_round: Uniformly drawn round whose iterate is the randomized output
        output_models: Client models after ``output_round`` rounds
        elapsed: Wall-clock seconds
        extras: Final IFCA centers or Ditto global model
    """

    algorithm: Algorithm
    records: List[MetricsRecord]
    snapshots: Dict[int, Dict[str, Any]]
    final_state: TrainerState
    gamma: float
    output_round: int
    output_models: np.ndarray
    elapsed: float = 0.0
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def output_record(self) -> MetricsRecord:
        return self.records[self.output_round]


def build_tasks(task_cfg: TaskConfig, seed: int) -> Tuple[List[Task], ClusterLayout]:
    """Generate the task instance described by ``task_cfg``."""
    if task_cfg.kind is TaskKind.CLUSTERED_QUADRATICS:
        return make_clustered_quadratics(
            task_cfg.K, task_cfg.c, task_cfg.d, task_cfg.a_range,
            task_cfg.separation, task_cfg.sigma, seed,
        )
    return make_label_permuted_classification(
        task_cfg.K, task_cfg.c, task_cfg.d, task_cfg.n_classes,
        task_cfg.n_per_client, seed, class_sep=task_cfg.class_sep, n_holdout=task_cfg.n_holdout,
    )


def select_output_round(cfg: TrainConfig) -> int:
    """Draw s uniformly from 0..T-1 on the (seed, "output") stream; 0 when T = 0."""
    if cfg.T == 0:
        return 0
    return int(substream(cfg.seed, "output").integers(0, cfg.T))


class _Stepper:
    """Holds the per-algorithm side state (global model, IFCA centers) between rounds."""

    def __init__(self, algorithm: Algorithm, state: TrainerState, tasks: Sequence[Task],
                 layout: ClusterLayout, cfg: TrainConfig):
        self.algorithm = algorithm
        self.tasks = tasks
        self.layout = layout
        self.cfg = cfg
        self.global_model = state.X[0].copy()
        self.centers = None
        if algorithm is Algorithm.IFCA:
            k = cfg.ifca_k if cfg.ifca_k is not None else layout.n_clusters
            self.centers = initial_centers(state.X[0], k, cfg)

    def step(self, state: TrainerState) -> TrainerState:
        algorithm, tasks, cfg = self.algorithm, self.tasks, self.cfg
        if algorithm is Algorithm.COBO:
            return cobo_round(state, tasks, cfg)
        if algorithm is Algorithm.LOCAL:
            return local_round(state, tasks, cfg)
        if algorithm is Algorithm.FEDAVG:
            return fedavg_round(state, tasks, cfg)
        if algorithm is Algorithm.FINETUNE_FEDAVG:
            return finetune_fedavg(state, tasks, cfg)
        if algorithm is Algorithm.DITTO:
            state, self.global_model = ditto_round(state, self.global_model, tasks, cfg)
            return state
        if algorithm is Algorithm.IFCA:
            state, self.centers = ifca_round(state, self.centers, tasks, cfg)
            return state
        if algorithm is Algorithm.ORACLE:
            return oracle_round(state, self.layout, tasks, cfg)
        raise UsageError(f"Unknown algorithm: {algorithm}")


def run_experiment(
    algorithm: Algorithm,
    tasks: Sequence[Task],
    layout: ClusterLayout,
    cfg: TrainConfig,
    progress: bool = False,
) -> RunResult:
    """Run ``algorithm`` for cfg.T rounds from the common initial model.

    Metrics are recorded after every round; for CoBo, W is snapshotted at
    round 0, every ``cfg.snapshot_interval()`` rounds and at round T.

    Raises:
        UsageError: If the tasks and layout disagree on the client count
    """
    algorithm = Algorithm(algorithm)
    if len(tasks) != layout.n_clients:
        raise UsageError(f"{len(tasks)} tasks but the layout has {layout.n_clients} clients")

    start = time.perf_counter()
    state = initial_state(tasks, cfg)
    is_cobo = algorithm is Algorithm.COBO

    gamma = cfg.gamma
    if is_cobo and cfg.auto_gamma:
        gamma = calibrate_gamma(state.X, tasks, cfg.b, cfg.seed, cfg.gamma)
        cfg = replace(cfg, gamma=gamma)

    output_round = select_output_round(cfg)
    output_models = state.X.copy()
    every = cfg.snapshot_interval()
    records = [collect_metrics(0, state.X, tasks, layout, state.W if is_cobo else None)]
    snapshots = {0: state.W.to_json(0)} if is_cobo else {}

    logger.info("Running %s for %d rounds on %d clients", algorithm.value, cfg.T, len(tasks))
    stepper = _Stepper(algorithm, state, tasks, layout, cfg)
    for _ in tqdm(range(cfg.T), desc=algorithm.value, disable=not progress, leave=False):
        state = stepper.step(state)
        if not np.all(np.isfinite(state.X)):
            raise UsageError(f"{algorithm.value} diverged at round {state.t}; reduce train.eta")
        records.append(collect_metrics(state.t, state.X, tasks, layout, state.W if is_cobo else None))
        if state.t == output_round:
            output_models = state.X.copy()
        if is_cobo and (state.t % every == 0 or state.t == cfg.T):
            snapshots[state.t] = state.W.to_json(state.t)

    elapsed = time.perf_counter() - start
    logger.info("Finished %s in %.2fs", algorithm.value, elapsed)
    extras = {}
    if algorithm is Algorithm.IFCA:
        extras["centers"] = stepper.centers
    elif algorithm is Algorithm.DITTO:
        extras["global_model"] = stepper.global_model
    return RunResult(
        algorithm=algorithm,
        records=records,
        snapshots=snapshots,
        final_state=state,
        gamma=gamma,
        output_round=output_round,
        output_models=output_models,
        elapsed=elapsed,
        extras=extras,
    )


def run_configured(cfg: ExperimentConfig, algorithm: Algorithm, progress: bool = False) -> RunResult:
    """Build the configured task instance and run one algorithm on it."""
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)
    return run_experiment(algorithm, tasks, layout, cfg.train, progress=progress)


def run_algorithms(cfg: ExperimentConfig, algorithms: Sequence[Algorithm], jobs: int = 1,
                   progress: bool = False) -> Dict[Algorithm, RunResult]:
    """Run several algorithms on the same task instance, optionally in parallel processes."""
    results = run_parallel(run_configured, [(cfg, a, progress and jobs <= 1) for a in algorithms], jobs)
    return dict(zip(algorithms, results))



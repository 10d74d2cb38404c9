"""End-to-end scenarios on the standard benchmarks (deselect with -m "not slow")."""

from dataclasses import replace

import numpy as np
import pytest

from cobosim.collab import Mode, SamplingKind, SamplingStrategy
from cobosim.config import Algorithm, ConfigManager, TrainConfig, get_preset, merge_raw
from cobosim.metrics import final_losses, settled_recovery_round
from cobosim.operations.compare import compare_algorithms
from cobosim.operations.runner import build_tasks, run_experiment
from cobosim.operations.verify import verify_theory
from cobosim.tasks import ClusterLayout, QuadraticTask

pytestmark = pytest.mark.slow


def _benchmark(**train):
    raw = merge_raw(get_preset("theory"), {"train": train})
    return ConfigManager().build(raw)


def test_structure_recovery():
    cfg = _benchmark()
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)
    result = run_experiment(Algorithm.COBO, tasks, layout, cfg.train)
    assert result.records[-1].recovery_error == 0.0
    settled = settled_recovery_round(result.records)
    assert settled is not None and settled <= cfg.train.T // 4


@pytest.mark.xfail(
    strict=True,
    reason="the rate form assumes the balancing step size; at T=2000 the stability cap on eta binds "
           "below it and the measured averages exceed the rate-form right-hand sides",
)
def test_benchmark_rate_bounds_hold():
    report, _ = verify_theory(_benchmark())
    assert report.conditions_hold
    for cluster in report.clusters:
        assert cluster.measured_consensus <= cluster.consensus_bound_rhs
        assert cluster.measured_gradnorm <= cluster.gradnorm_bound_rhs
        assert cluster.measured_corollary <= cluster.corollary_rhs


def test_benchmark_rate_violation_fails_the_check():
    report, _ = verify_theory(_benchmark())
    assert report.conditions_hold
    assert not report.bounds_hold
    assert not report.passed
    for cluster in report.clusters:
        assert cluster.measured_consensus <= cluster.consensus_explicit_rhs
        assert cluster.measured_gradnorm <= cluster.gradnorm_explicit_rhs


def test_pair_gradient_norm_shrinks_with_horizon():
    cfg = _benchmark(T=200)
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)

    def averaged(T):
        result = run_experiment(Algorithm.COBO, tasks, layout, replace(cfg.train, T=T))
        return np.mean([r.pair_grad_norm_avg for r in result.records[:T]])

    assert averaged(16 * 200) <= 0.5 * averaged(200)


def test_sampling_strategies_recover_structure():
    cfg = _benchmark()
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)
    losses = {}
    for kind in SamplingKind:
        train = replace(cfg.train, strategy=SamplingStrategy(kind))
        result = run_experiment(Algorithm.COBO, tasks, layout, train)
        assert result.records[-1].recovery_error == 0.0, kind
        losses[kind] = np.mean(final_losses(result.records, train.tail_fraction))
    assert losses[SamplingKind.MIXED] <= 1.05 * losses[SamplingKind.EVERY_PAIR]


def test_quadratic_comparison():
    cfg = _benchmark()
    summary = compare_algorithms(cfg)
    rows = {row["algorithm"]: row for row in summary["rows"]}
    assert rows["cobo"]["final_loss"] < rows["fedavg"]["final_loss"]
    assert rows["cobo"]["final_loss"] < rows["local"]["final_loss"]
    assert rows["cobo"]["improved_fraction"] == 1.0
    assert rows["cobo"]["recovery_error"] == 0.0


CLASSIFICATION_SEEDS = (0, 1, 2, 3, 4)
CLASSIFICATION_ALGORITHMS = [
    Algorithm.FEDAVG, Algorithm.FINETUNE_FEDAVG, Algorithm.DITTO, Algorithm.ORACLE, Algorithm.COBO,
]


@pytest.fixture(scope="module")
def classification_rows():
    """Per-algorithm accuracy and Imp.% on the classification preset, one entry per seed."""
    accuracy = {a.value: [] for a in CLASSIFICATION_ALGORITHMS}
    improved = {a.value: [] for a in CLASSIFICATION_ALGORITHMS}
    for seed in CLASSIFICATION_SEEDS:
        cfg = ConfigManager().build(merge_raw(get_preset("classification"), {"train": {"seed": seed}}))
        summary = compare_algorithms(cfg, CLASSIFICATION_ALGORITHMS, jobs=2)
        for row in summary["rows"]:
            if row["algorithm"] in accuracy:
                accuracy[row["algorithm"]].append(row["final_accuracy"])
                improved[row["algorithm"]].append(row["improved_fraction"])
    mean = {name: float(np.mean(values)) for name, values in accuracy.items()}
    return mean, improved


def test_classification_baseline_ordering(classification_rows):
    mean, improved = classification_rows
    assert mean["cobo"] >= mean["ditto"]
    assert mean["ditto"] >= mean["fedavg"]
    assert mean["finetune_fedavg"] >= mean["fedavg"]
    assert mean["cobo"] >= mean["finetune_fedavg"]
    assert mean["cobo"] >= mean["oracle"] - 0.02
    assert improved["cobo"] == [1.0] * len(CLASSIFICATION_SEEDS)


@pytest.mark.xfail(
    strict=False,
    reason="with a small pull the personalized models sit within a fraction of a point of "
           "fine-tuned FedAvg, so the sign of that gap and of every per-client holdout gain "
           "over local training is not guaranteed on every seed",
)
def test_classification_ditto_beats_finetuning(classification_rows):
    mean, improved = classification_rows
    assert mean["ditto"] >= mean["finetune_fedavg"]
    assert improved["ditto"] == [1.0] * len(CLASSIFICATION_SEEDS)


def test_simplex_prefers_near_duplicate():
    d = 4
    centers = [np.zeros(d), 0.5 * np.eye(d)[0], 5.0 * np.eye(d)[1], 10.0 * np.eye(d)[2]]
    tasks = [QuadraticTask(1.0, mu, noise_sigma=0.1) for mu in centers]
    layout = ClusterLayout((0, 0, 1, 2))
    cfg = TrainConfig(T=1000, eta=0.05, rho=2.0, auto_gamma=True, mode=Mode.SIMPLEX, snapshot_every=1)
    result = run_experiment(Algorithm.COBO, tasks, layout, cfg)

    assert len(result.snapshots) == 1001
    for snapshot in result.snapshots.values():
        W = np.asarray(snapshot["entries"]).reshape(4, 4)
        assert W.min() >= 0.0
        assert np.max(np.abs(W.sum(axis=1) - 1.0)) <= 1e-9

    W = result.final_state.W.entries
    for client, partner in ((0, 1), (1, 0)):
        others = [k for k in range(4) if k != client]
        assert others[int(np.argmax(W[client, others]))] == partner

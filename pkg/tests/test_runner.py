import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from cobosim.collab import Mode
from cobosim.config import Algorithm, ConfigManager, TrainConfig
from cobosim.errors import UsageError
from cobosim.operations.compare import compare_algorithms, summarize
from cobosim.operations.report import (
    METRICS_COLUMNS,
    write_ema_csv,
    write_metrics_csv,
    write_snapshots,
    write_summary,
)
from cobosim.operations.runner import build_tasks, run_algorithms, run_experiment, select_output_round
from cobosim.tasks import ClusterLayout, make_clustered_quadratics


def _small_config(**train):
    raw = {
        "task": {"kind": "clustered_quadratics", "K": 2, "c": 2, "d": 6},
        "algorithms": ["local", "cobo"],
        "train": dict({"T": 40, "auto_gamma": True}, **train),
    }
    return ConfigManager().build(raw)


def test_zero_rounds_records_initial_state_only():
    tasks, layout = make_clustered_quadratics(2, 2, 4, (0.9, 1.1), 10.0, 0.1, seed=0)
    result = run_experiment(Algorithm.COBO, tasks, layout, TrainConfig(T=0))
    assert [r.round for r in result.records] == [0]
    assert result.output_round == 0
    assert list(result.snapshots) == [0]


def test_runs_are_deterministic():
    cfg = _small_config()
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)
    first = run_experiment(Algorithm.COBO, tasks, layout, cfg.train)
    second = run_experiment(Algorithm.COBO, tasks, layout, cfg.train)
    assert np.array_equal(first.final_state.X, second.final_state.X)
    assert [r.to_dict() for r in first.records] == [r.to_dict() for r in second.records]
    assert first.snapshots == second.snapshots


def test_seed_changes_trajectory():
    cfg = _small_config()
    tasks, layout = build_tasks(cfg.task, 0)
    a = run_experiment(Algorithm.LOCAL, tasks, layout, cfg.train)
    b = run_experiment(Algorithm.LOCAL, tasks, layout, replace(cfg.train, seed=1))
    assert not np.array_equal(a.final_state.X, b.final_state.X)


def test_snapshot_cadence():
    cfg = _small_config(snapshot_every=15)
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)
    result = run_experiment(Algorithm.COBO, tasks, layout, cfg.train)
    assert sorted(result.snapshots) == [0, 15, 30, 40]
    assert result.snapshots[15]["round"] == 15
    assert run_experiment(Algorithm.LOCAL, tasks, layout, cfg.train).snapshots == {}


@pytest.mark.parametrize("n_holdout, expected", [(None, 8), (7, 7)])
def test_build_tasks_holdout_size(n_holdout, expected):
    raw = {"task": {"kind": "label_permuted", "K": 2, "c": 2, "d": 3, "n_classes": 3,
                    "n_per_client": 40, "n_holdout": n_holdout}}
    cfg = ConfigManager().build(raw)
    tasks, _ = build_tasks(cfg.task, cfg.train.seed)
    assert [len(task.holdout_labels) for task in tasks] == [expected] * 4


def test_auto_gamma_is_recorded():
    cfg = _small_config()
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)
    result = run_experiment(Algorithm.COBO, tasks, layout, cfg.train)
    assert result.gamma != cfg.train.gamma
    assert result.gamma > 0


def test_output_round_is_seeded_and_in_range():
    cfg = TrainConfig(T=50, seed=4)
    s = select_output_round(cfg)
    assert 0 <= s < 50
    assert select_output_round(cfg) == s


def test_output_models_match_recorded_round():
    cfg = _small_config()
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)
    result = run_experiment(Algorithm.LOCAL, tasks, layout, cfg.train)
    loss = [task.loss(result.output_models[i]) for i, task in enumerate(tasks)]
    assert loss == result.output_record.per_client_loss


def test_divergence_is_reported():
    cfg = _small_config(eta=10.0)
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)
    with pytest.raises(UsageError, match="diverged"):
        run_experiment(Algorithm.LOCAL, tasks, layout, replace(cfg.train, T=2000))


def test_mismatched_layout_is_rejected():
    tasks, _ = make_clustered_quadratics(2, 2, 4, (0.9, 1.1), 10.0, 0.1, seed=0)
    with pytest.raises(UsageError):
        run_experiment(Algorithm.LOCAL, tasks, ClusterLayout((0, 1)), TrainConfig(T=1))


def test_every_algorithm_runs():
    cfg = _small_config()
    results = run_algorithms(cfg, list(Algorithm))
    assert list(results) == list(Algorithm)
    for result in results.values():
        assert len(result.records) == cfg.train.T + 1
        assert np.all(np.isfinite(result.final_state.X))
    assert "centers" in results[Algorithm.IFCA].extras
    assert "global_model" in results[Algorithm.DITTO].extras


def test_parallel_matches_serial():
    cfg = _small_config()
    serial = run_algorithms(cfg, [Algorithm.LOCAL, Algorithm.COBO], jobs=1)
    parallel = run_algorithms(cfg, [Algorithm.LOCAL, Algorithm.COBO], jobs=2)
    for algorithm in serial:
        assert np.array_equal(serial[algorithm].final_state.X, parallel[algorithm].final_state.X)


def test_metrics_csv_layout(tmp_path):
    cfg = _small_config(T=3)
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)
    result = run_experiment(Algorithm.COBO, tasks, layout, cfg.train)
    path = write_metrics_csv(result, layout, tmp_path)
    assert path.name == "cobo_metrics.csv"
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == METRICS_COLUMNS
    assert len(rows) == 1 + 4 * 4
    assert rows[1][:3] == ["0", "cobo", "0"]
    assert rows[1][5] == ""
    assert rows[3][6] == "1"


def test_metrics_csv_is_reproducible(tmp_path):
    cfg = _small_config(T=10)
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)
    a = write_metrics_csv(run_experiment(Algorithm.COBO, tasks, layout, cfg.train), layout, tmp_path / "a")
    b = write_metrics_csv(run_experiment(Algorithm.COBO, tasks, layout, cfg.train), layout, tmp_path / "b")
    assert a.read_bytes() == b.read_bytes()


def test_snapshot_files(tmp_path):
    cfg = _small_config(T=10, snapshot_every=5)
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)
    result = run_experiment(Algorithm.COBO, tasks, layout, cfg.train)
    paths = write_snapshots(result, tmp_path)
    assert [p.name for p in paths] == ["cobo_W_0.json", "cobo_W_5.json", "cobo_W_10.json"]
    payload = json.loads(paths[-1].read_text())
    assert payload["round"] == 10 and payload["n"] == 4 and len(payload["entries"]) == 16
    assert write_ema_csv(result, tmp_path) is None


def test_simplex_run_writes_ema(tmp_path):
    cfg = _small_config(T=10, snapshot_every=2, mode="simplex")
    tasks, layout = build_tasks(cfg.task, cfg.train.seed)
    result = run_experiment(Algorithm.COBO, tasks, layout, cfg.train)
    assert result.final_state.W.mode is Mode.SIMPLEX
    assert all(r.recovery_error is None for r in result.records)
    path = write_ema_csv(result, tmp_path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["round", "client_id", "column", "weight", "weight_ema"]
    assert len(rows) == 1 + 6 * 4 * 4


def test_summary_uses_local_baseline(tmp_path):
    cfg = _small_config()
    summary = compare_algorithms(cfg, [Algorithm.COBO, Algorithm.FEDAVG])
    assert [row["algorithm"] for row in summary["rows"]] == ["local", "cobo", "fedavg"]
    local_row = summary["rows"][0]
    assert local_row["improved_fraction"] == 0.0
    assert sorted(summary["ranking_by_loss"]) == ["cobo", "fedavg", "local"]
    assert summary["T"] == 40

    paths = write_summary(summary, tmp_path)
    assert [p.name for p in paths] == ["summary.csv", "summary.json"]
    assert json.loads(paths[1].read_text())["ranking_by_loss"] == summary["ranking_by_loss"]


def test_summary_without_local_has_no_improvement():
    cfg = _small_config()
    results = run_algorithms(cfg, [Algorithm.COBO])
    row = summarize(results, 0.1)["rows"][0]
    assert row["improved_fraction"] is None
    assert row["recovery_error"] is not None

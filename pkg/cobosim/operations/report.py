"""Metric, snapshot and summary files written by the CLI."""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..collab.matrix import Mode
from ..metrics.measures import ema_weights
from ..tasks.layout import ClusterLayout
from ..utils.paths import atomic_write_text
from .runner import RunResult

logger = logging.getLogger(__name__)

METRICS_COLUMNS = [
    "round", "algorithm", "client_id", "loss", "grad_norm_sq",
    "accuracy", "cluster_id", "consensus", "recovery_error",
]
SUMMARY_COLUMNS = [
    "algorithm", "final_loss", "final_eval_loss", "final_accuracy",
    "improved_fraction", "recovery_error", "elapsed_seconds",
]
EMA_COLUMNS = ["round", "client_id", "column", "weight", "weight_ema"]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(columns: List[str], rows: List[List[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def metrics_rows(result: RunResult, layout: ClusterLayout) -> List[List[Any]]:
    """One row per (round, client) in METRICS_COLUMNS order."""
    rows = []
    name = result.algorithm.value
    for record in result.records:
        for i, loss in enumerate(record.per_client_loss):
            cluster = layout.cluster_of(i)
            rows.append([
                record.round,
                name,
                i,
                loss,
                record.per_client_grad_norm_sq[i],
                record.accuracy[i] if record.accuracy is not None else None,
                cluster,
                record.per_cluster_consensus[cluster],
                record.recovery_error,
            ])
    return rows


def write_metrics_csv(result: RunResult, layout: ClusterLayout, out_dir: Path) -> Path:
    path = Path(out_dir) / f"{result.algorithm.value}_metrics.csv"
    atomic_write_text(path, _csv_text(METRICS_COLUMNS, metrics_rows(result, layout)))
    return path


def write_json(data: Any, path: Path) -> Path:
    atomic_write_text(Path(path), json.dumps(data, indent=2) + "\n")
    return Path(path)


def write_snapshots(result: RunResult, out_dir: Path) -> List[Path]:
    """Write ``<algo>_W_<round>.json`` for every recorded snapshot."""
    paths = [
        write_json(snapshot, Path(out_dir) / f"{result.algorithm.value}_W_{round_index}.json")
        for round_index, snapshot in sorted(result.snapshots.items())
    ]
    if paths:
        logger.info("Wrote %d W snapshots for %s", len(paths), result.algorithm.value)
    return paths


def write_ema_csv(result: RunResult, out_dir: Path, beta: float = 0.9) -> Optional[Path]:
    """Smoothed Simplex weight trajectories; None for runs without Simplex snapshots."""
    snapshots = [s for _, s in sorted(result.snapshots.items())]
    if not snapshots or snapshots[0]["mode"] != Mode.SIMPLEX.value:
        return None
    n = snapshots[0]["n"]
    rows = []
    for client in range(n):
        raw = ema_weights(snapshots, client, beta=0.0)
        smooth = ema_weights(snapshots, client, beta=beta)
        for k, snapshot in enumerate(snapshots):
            for column in range(n):
                rows.append([snapshot["round"], client, column, float(raw[k, column]), float(smooth[k, column])])
    path = Path(out_dir) / f"{result.algorithm.value}_weights_ema.csv"
    atomic_write_text(path, _csv_text(EMA_COLUMNS, rows))
    return path


def write_summary(summary: Dict[str, Any], out_dir: Path) -> List[Path]:
    """summary.csv (one row per algorithm) and summary.json (the full summary)."""
    out_dir = Path(out_dir)
    rows = [[row.get(column) for column in SUMMARY_COLUMNS] for row in summary["rows"]]
    csv_path = out_dir / "summary.csv"
    atomic_write_text(csv_path, _csv_text(SUMMARY_COLUMNS, rows))
    return [csv_path, write_json(summary, out_dir / "summary.json")]

"""Algorithm comparison on one shared task instance."""

from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..config.manager import Algorithm, ExperimentConfig
from ..metrics.measures import final_accuracy, final_losses, improved_fraction
from ..utils.formatting import format_duration, format_metric, format_percent
from .runner import RunResult, run_algorithms

ALL_ALGORITHMS = tuple(Algorithm)


def summarize_run(result: RunResult, tail_fraction: float,
                  local: Optional[RunResult] = None) -> Dict[str, Any]:
    """Summary row of one run; Imp.% needs the Local run of the same instance."""
    train_losses = final_losses(result.records, tail_fraction)
    holdout = result.records[-1].eval_loss is not None
    eval_losses = final_losses(result.records, tail_fraction, holdout=True) if holdout else None
    accuracy = final_accuracy(result.records, tail_fraction)

    improved = None
    if local is not None:
        mine = eval_losses if holdout else train_losses
        baseline = final_losses(local.records, tail_fraction, holdout=holdout)
        improved = improved_fraction(mine, baseline)

    return {
        "algorithm": result.algorithm.value,
        "final_loss": float(np.mean(train_losses)),
        "final_eval_loss": float(np.mean(eval_losses)) if eval_losses is not None else None,
        "final_accuracy": float(np.mean(accuracy)) if accuracy is not None else None,
        "improved_fraction": improved,
        "recovery_error": result.records[-1].recovery_error,
        "elapsed_seconds": result.elapsed,
        "per_client_final_loss": train_losses,
        "per_client_final_accuracy": accuracy,
    }


def summarize(results: Dict[Algorithm, RunResult], tail_fraction: float) -> Dict[str, Any]:
    """Rows in run order plus the algorithms ranked by final loss (lowest first)."""
    local = results.get(Algorithm.LOCAL)
    rows = [summarize_run(result, tail_fraction, local) for result in results.values()]
    ranking = [row["algorithm"] for row in sorted(rows, key=lambda row: row["final_loss"])]
    return {"rows": rows, "ranking_by_loss": ranking}


def compare_algorithms(cfg: ExperimentConfig, algorithms: Sequence[Algorithm] = ALL_ALGORITHMS,
                       jobs: int = 1, progress: bool = False) -> Dict[str, Any]:
    """Run every algorithm with the shared task seed and summarize.

    Local is always included since Imp.% is measured against it.
    """
    algorithms = list(dict.fromkeys(algorithms))
    if Algorithm.LOCAL not in algorithms:
        algorithms.insert(0, Algorithm.LOCAL)
    results = run_algorithms(cfg, algorithms, jobs=jobs, progress=progress)
    summary = summarize(results, cfg.train.tail_fraction)
    summary["seed"] = cfg.train.seed
    summary["T"] = cfg.train.T
    return summary


def print_comparison(summary: Dict[str, Any]):
    """Print a formatted comparison table.

    Args:
        summary: Summary dictionary from compare_algorithms()
    """
    print("\n" + "=" * 86)
    print(f"📊 Algorithm Comparison (T={summary.get('T')}, seed={summary.get('seed')})")
    print("=" * 86)
    print(f"{'Algorithm':<18} {'Final loss':<12} {'Eval loss':<12} {'Accuracy':<10} {'Imp.%':<8} {'Recovery':<10} {'Time':<8}")
    print("-" * 86)
    for row in summary["rows"]:
        print(
            f"{row['algorithm']:<18} "
            f"{format_metric(row['final_loss']):<12} "
            f"{format_metric(row['final_eval_loss']):<12} "
            f"{format_percent(row['final_accuracy']):<10} "
            f"{format_percent(row['improved_fraction']):<8} "
            f"{format_metric(row['recovery_error'], 3):<10} "
            f"{format_duration(row['elapsed_seconds']):<8}"
        )
    print("-" * 86)
    print(f"Ranking by final loss: {' < '.join(summary['ranking_by_loss'])}")
    print("=" * 86 + "\n")

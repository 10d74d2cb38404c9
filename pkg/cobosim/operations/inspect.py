"""Task instance inspection."""

from itertools import combinations
from typing import Any, Dict

import numpy as np

from ..config.manager import ExperimentConfig, TaskKind
from ..metrics.theory import collaborativeness_constants
from ..utils.formatting import format_metric
from .runner import build_tasks


def inspect_task(cfg: ExperimentConfig) -> Dict[str, Any]:
    """Generate the configured task instance and describe it.

    Args:
        cfg: Experiment configuration

    Returns:
        Dictionary with the cluster layout, per-client details and, for
        quadratics, center distances and per-pair collaborativeness constants
    """
    task_cfg = cfg.task
    tasks, layout = build_tasks(task_cfg, cfg.train.seed)
    info: Dict[str, Any] = {
        "kind": task_cfg.kind.value,
        "seed": cfg.train.seed,
        "n_clients": layout.n_clients,
        "n_clusters": layout.n_clusters,
        "dim": tasks[0].dim,
        "clusters": [list(layout.members(k)) for k in range(layout.n_clusters)],
    }

    if task_cfg.kind is TaskKind.CLUSTERED_QUADRATICS:
        info["clients"] = [
            {"client": i, "cluster": layout.cluster_of(i), "a": task.a,
             "center_norm": float(np.linalg.norm(task.mu)), "sigma": task.noise_sigma}
            for i, task in enumerate(tasks)
        ]
        centers = [tasks[layout.members(k)[0]].mu for k in range(layout.n_clusters)]
        info["center_distances"] = [
            [float(np.linalg.norm(a - b)) for b in centers] for a in centers
        ]
        info["min_center_distance"] = min(
            (info["center_distances"][k][l] for k, l in combinations(range(layout.n_clusters), 2)),
            default=None,
        )
        constants = collaborativeness_constants(tasks, layout, seed=cfg.train.seed)
        info["pairs"] = [
            {"i": c.i, "j": c.j, "same_cluster": c.same_cluster, "m_analytic": c.m_analytic,
             "m_empirical": c.m_empirical, "zeta_numeric": c.zeta_numeric, "zeta_squared_denominator": c.zeta_squared_denominator}
            for c in constants.values()
        ]
    else:
        info["clients"] = [
            {"client": i, "cluster": layout.cluster_of(i), "n_samples": len(task.labels),
             "n_holdout": len(task.holdout_labels), "label_perm": task.label_perm.tolist()}
            for i, task in enumerate(tasks)
        ]
    return info


def print_inspection(info: Dict[str, Any]):
    """Print formatted task inspection information.

    Args:
        info: Inspection dictionary from inspect_task()
    """
    print("\n" + "=" * 60)
    print(f"📊 Task Instance: {info['kind']} (seed {info['seed']})")
    print("=" * 60)
    print(f"Clients: {info['n_clients']} in {info['n_clusters']} clusters")
    print(f"Model dimension: {info['dim']}")
    for k, members in enumerate(info["clusters"]):
        print(f"  Cluster {k}: clients {members}")

    if info["kind"] == TaskKind.CLUSTERED_QUADRATICS.value:
        print("\nClient  Cluster  a        |mu|")
        for client in info["clients"]:
            print(f"{client['client']:<7} {client['cluster']:<8} {client['a']:<8.4f} {client['center_norm']:.3f}")
        print(f"\nMin center distance: {format_metric(info['min_center_distance'])}")
        same = [p for p in info["pairs"] if p["same_cluster"]]
        if same:
            worst = max(same, key=lambda p: p["m_analytic"])
            print(f"Max same-cluster M: {worst['m_analytic']:.4f} (clients {worst['i']}, {worst['j']})")
        cross = [p for p in info["pairs"] if not p["same_cluster"]]
        if cross:
            weakest = min(cross, key=lambda p: p["zeta_numeric"])
            print(f"Min cross-cluster zeta^2: {weakest['zeta_numeric']:.4f} (clients {weakest['i']}, {weakest['j']})")
    else:
        print("\nClient  Cluster  Train  Holdout  Label permutation")
        for client in info["clients"]:
            print(f"{client['client']:<7} {client['cluster']:<8} {client['n_samples']:<6} "
                  f"{client['n_holdout']:<8} {client['label_perm']}")
    print("=" * 60 + "\n")

"""Preset experiment definitions for the standard scenarios."""

import copy
from typing import Any, Dict, Optional

_BENCHMARK_TASK = {
    "kind": "clustered_quadratics",
    "K": 4,
    "c": 2,
    "d": 20,
    "a_range": [0.9, 1.1],
    "separation": 10.0,
    "sigma": 0.1,
}

_BENCHMARK_TRAIN = {
    "eta": 0.05,
    "rho": 2.0,
    "b": 1,
    "T": 2000,
    "auto_gamma": True,
    "mode": "box",
}


def _benchmark(strategy: str, algorithms=("cobo",)) -> Dict[str, Any]:
    return {
        "task": dict(_BENCHMARK_TASK),
        "algorithms": list(algorithms),
        "train": dict(_BENCHMARK_TRAIN, strategy={"kind": strategy}),
    }


# Preset definitions
PRESETS: Dict[str, Dict[str, Any]] = {
    "quadratic-benchmark": {
        "config": _benchmark("every_pair", algorithms=(
            "local", "fedavg", "finetune_fedavg", "ditto", "ifca", "oracle", "cobo",
        )),
        "description": "8 clients in 4 quadratic clusters, every algorithm (structure recovery)"
    },
    "theory": {
        "config": _benchmark("every_pair"),
        "description": "Quadratic benchmark for verify-theory (rho, eta and b are derived)"
    },
    "sampling-constant": {
        "config": _benchmark("constant"),
        "description": "Quadratic benchmark, pairs sampled with probability 1/n"
    },
    "sampling-time": {
        "config": _benchmark("time_dependent"),
        "description": "Quadratic benchmark, pair probability decaying as c0/(t+1)"
    },
    "sampling-mixed": {
        "config": _benchmark("mixed"),
        "description": "Quadratic benchmark, constant rate early then time-dependent"
    },
    "classification": {
        "config": {
            "task": {
                "kind": "label_permuted",
                "K": 2,
                "c": 2,
                "d": 20,
                "n_classes": 10,
                "n_per_client": 500,
                "n_holdout": 1000,
            },
            "algorithms": ["local", "fedavg", "finetune_fedavg", "ditto", "ifca", "oracle", "cobo"],
            "train": {
                "eta": 0.1, "rho": 1.0, "b": 32, "T": 3000,
                "gamma": 0.01, "auto_gamma": False, "ditto_lambda": 0.005,
            },
        },
        "description": "Label-permuted linear softmax, 2 clusters of 2 clients (baseline ordering)"
    },
    "simplex": {
        "config": {
            "task": dict(_BENCHMARK_TASK, K=2, c=2),
            "algorithms": ["cobo"],
            "train": dict(_BENCHMARK_TRAIN, T=1000, mode="simplex", snapshot_every=10),
        },
        "description": "Row-simplex collaboration weights on 2 quadratic clusters"
    },
}


def get_preset(name: str) -> Dict[str, Any]:
    """Get preset configuration by name.

    Args:
        name: Preset name (see list_presets())

    Returns:
        Copy of the preset's raw config mapping

    Raises:
        KeyError: If preset name doesn't exist
    """
    if name not in PRESETS:
        available = ", ".join(PRESETS.keys())
        raise KeyError(f"Unknown preset '{name}'. Available presets: {available}")
    return copy.deepcopy(PRESETS[name]["config"])


def list_presets() -> Dict[str, Dict[str, Any]]:
    """List all available presets.

    Returns:
        Dictionary of all presets
    """
    return copy.deepcopy(PRESETS)


def merge_raw(base: Optional[Dict[str, Any]], override: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """Recursively overlay ``override`` on ``base``; non-dict values replace."""
    merged = copy.deepcopy(base or {})
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_raw(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged

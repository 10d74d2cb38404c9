"""Configuration management for cobosim."""

from .manager import (
    Algorithm,
    ConfigManager,
    ExperimentConfig,
    TaskConfig,
    TaskKind,
    TrainConfig,
    config_to_dict,
    load_config,
    save_config,
)
from .presets import get_preset, list_presets, merge_raw, PRESETS

__all__ = [
    'Algorithm',
    'ConfigManager',
    'ExperimentConfig',
    'TaskConfig',
    'TaskKind',
    'TrainConfig',
    'config_to_dict',
    'load_config',
    'save_config',
    'get_preset',
    'list_presets',
    'merge_raw',
    'PRESETS',
]

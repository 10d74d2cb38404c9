"""Collaboration weights and the client-selection dynamics."""

from .matrix import CollaborationMatrix, Mode
from .sampling import DEFAULT_SWITCH_FRACTION, SamplingKind, SamplingStrategy, sample_pairs
from .selection import (
    calibrate_gamma,
    client_selection_pass,
    midpoint_alignment,
    self_alignment,
    update_row_simplex,
    update_weight_box,
)

__all__ = [
    'CollaborationMatrix',
    'Mode',
    'DEFAULT_SWITCH_FRACTION',
    'SamplingKind',
    'SamplingStrategy',
    'sample_pairs',
    'calibrate_gamma',
    'client_selection_pass',
    'midpoint_alignment',
    'self_alignment',
    'update_row_simplex',
    'update_weight_box',
]

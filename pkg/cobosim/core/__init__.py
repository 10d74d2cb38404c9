"""Vector arithmetic and projection operators."""

from .vector import Vector, as_vector, check_same_dim, dot, sq_norm
from .projections import project_box, project_simplex

__all__ = [
    'Vector',
    'as_vector',
    'check_same_dim',
    'dot',
    'sq_norm',
    'project_box',
    'project_simplex',
]

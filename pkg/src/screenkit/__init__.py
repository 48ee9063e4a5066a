"""Screening experiment toolkit.

Design construction (factorial, supersaturated, space-filling, trajectory
plans), analysis and variable selection (least squares and alias algebra,
elementary effects, odd/even contrasts, Dantzig selector, group screening,
Gaussian-process screening) and a benchmark driver for two standard test
functions.
"""

from .core import (
    Coding,
    Design,
    Metrics,
    ModelMatrix,
    ScreeningOutcome,
    TermSet,
    alias_matrix,
    build_model_matrix,
    half_normal_data,
    least_squares,
    screening_metrics,
)

__version__ = "0.1.0"

__all__ = [
    "Coding",
    "Design",
    "Metrics",
    "ModelMatrix",
    "ScreeningOutcome",
    "TermSet",
    "alias_matrix",
    "build_model_matrix",
    "half_normal_data",
    "least_squares",
    "screening_metrics",
    "__version__",
]

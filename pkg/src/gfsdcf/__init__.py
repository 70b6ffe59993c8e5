"""Correlation-filter tracking with group feature selection.

Filters are learned per frame by ADMM under channel and spatial group
sparsity plus a temporal smoothness anchor; ``kernels.BACKEND`` tells which
implementation of the per-frequency kernels is active.
"""
from .errors import (ConfigError, DivergenceError, GfsError, InputError, ParseError,
                     SequenceIOError, SingularityError)
from .features import FeatureSpec, extract
from .kernels import BACKEND
from .solver import (AdmmConfig, GfsSolution, RegularisationConfig, SelectionConfig, admm_solve,
                     dcf_closed_form, gaussian_label, objective_value)
from .tensor import circ_correlate, dft2, idft2
from .tracker import BoundingBox, TrackerConfig, track_sequence

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig", "BACKEND", "BoundingBox", "ConfigError", "DivergenceError", "FeatureSpec",
    "GfsError", "GfsSolution", "InputError", "ParseError", "RegularisationConfig",
    "SelectionConfig", "SequenceIOError", "SingularityError", "TrackerConfig", "admm_solve",
    "circ_correlate", "dcf_closed_form", "dft2", "extract", "gaussian_label", "idft2",
    "objective_value", "track_sequence",
]

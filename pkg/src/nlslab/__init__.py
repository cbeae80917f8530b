"""Encoding, classification, reduction and simulation of two-component cubic NLS systems."""

__version__ = "0.1.0"

from .errors import NlsLabError  # noqa: F401
from .system_repr import (  # noqa: F401
    MODEL_SYSTEM,
    CubicSystem,
    MatrixVectorRep,
    PairState,
    apply_change,
    from_matrix_vector,
    parse_system,
    to_matrix_vector,
)
from .classification import classify, check_assumption  # noqa: F401
from .invariants import build_quartic, eval_quartic  # noqa: F401
from .standard_form import StandardFormParams, build_standard, reduce  # noqa: F401

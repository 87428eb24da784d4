"""Harmonicity and biharmonicity checks for Riemannian submersions from 3-manifolds
onto surfaces, computed from adapted-frame integrability data with jet arithmetic."""

from .expr import DomainError, eval_jet, parse
from .geometry import Grid
from .harness import Tolerances, classify, fd_crosscheck, spaceform_audit
from .models import builtin, catalog
from .submersion import FramedModel, VerticalFieldModel, integrability_data, rotate_frame

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "FramedModel",
    "Grid",
    "Tolerances",
    "VerticalFieldModel",
    "builtin",
    "catalog",
    "classify",
    "eval_jet",
    "fd_crosscheck",
    "integrability_data",
    "parse",
    "rotate_frame",
    "spaceform_audit",
]

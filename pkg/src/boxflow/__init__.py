"""Box-covering approximation of global attractors for parametrized ODE
families, plus parameter-continuity diagnostics."""

__version__ = "0.1.0"

from .backend import BACKEND
from .boxset import BoxCover, GridSpec, fatten, hausdorff, semi_distance, subset, union
from .continuity import ParamGrid, discontinuity_scan, sweep
from .flow import FAMILIES, IntegratorConfig, SystemFamily, evolve, get_family
from .attractor import SolverSettings, approximate_attractor, image

__all__ = [
    "BACKEND",
    "BoxCover",
    "FAMILIES",
    "GridSpec",
    "IntegratorConfig",
    "ParamGrid",
    "SolverSettings",
    "SystemFamily",
    "approximate_attractor",
    "discontinuity_scan",
    "evolve",
    "fatten",
    "get_family",
    "hausdorff",
    "image",
    "semi_distance",
    "subset",
    "sweep",
    "union",
]

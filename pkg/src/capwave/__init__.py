"""Capillary-gravity water waves in a trapezoidal tank with moving contact lines.

Subpackages and modules:

* :mod:`capwave.geometry`: reference domain, surface displacement and the domain map
* :mod:`capwave.elliptic`: Q1 Poisson solvers and corner singular decompositions
* :mod:`capwave.fieldops`: material-derivative commutators and pressure subsystems
* :mod:`capwave.dynamics`: the evolution of the surface and the contact points
* :mod:`capwave.diagnostics`: energies, identity residuals and the contact-line energy law
* :mod:`capwave.cli`: configuration-driven entry point
"""

from .dynamics import FlowState, Physics, initial_state, picard_refine, step
from .errors import CapwaveError
from .geometry import CornerDomain, GeometryConfig, build_reference_domain

__version__ = "0.1.0"

__all__ = [
    "CapwaveError",
    "CornerDomain",
    "FlowState",
    "GeometryConfig",
    "Physics",
    "build_reference_domain",
    "initial_state",
    "picard_refine",
    "step",
    "__version__",
]

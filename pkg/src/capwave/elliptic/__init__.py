"""Elliptic solvers on the corner domain and corner singularity extraction."""

from .solvers import (
    EllipticSolver,
    dtn,
    harmonic_extension,
    inv_laplace,
    solve_mbvp,
    solve_nbvp,
    solver_for,
)

__all__ = [
    "EllipticSolver",
    "dtn",
    "harmonic_extension",
    "inv_laplace",
    "solve_mbvp",
    "solve_nbvp",
    "solver_for",
]

from .singular import (  # noqa: E402
    CornerMap,
    SingularDecomposition,
    corner_map,
    fit_exponent,
    gate,
    local_fit_order,
    singular_decompose,
    singular_exponent,
    singular_mode,
)

__all__ += [
    "CornerMap",
    "SingularDecomposition",
    "corner_map",
    "fit_exponent",
    "gate",
    "local_fit_order",
    "singular_decompose",
    "singular_exponent",
    "singular_mode",
]

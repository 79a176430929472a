"""Finite-difference thin obstacle solver and its frequency diagnostics."""
from .datum import BoundaryDatum, compile_expression, make_datum
from .diagnostics import (
    FrequencyProfile,
    boundary_integrals,
    classify_point,
    decay_check,
    detect_free_boundary,
    extrapolate_frequency,
    frequency_profile,
    grid_energy,
    radius_ladder,
)
from .grid import Stencil, optimal_omega, run_psor
from .solution import GridSolution, InadmissibleDatum, NonConvergence, solve

__all__ = [
    "BoundaryDatum", "compile_expression", "make_datum", "FrequencyProfile", "boundary_integrals",
    "classify_point", "decay_check", "detect_free_boundary", "extrapolate_frequency", "frequency_profile",
    "grid_energy", "radius_ladder", "Stencil", "optimal_omega", "run_psor", "GridSolution",
    "InadmissibleDatum", "NonConvergence", "solve",
]

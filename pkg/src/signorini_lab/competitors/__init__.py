"""Explicit epiperimetric competitors and their verifiers."""
from .base import CompetitorRecipe, ConstructionError, EpiReport, InadmissibleTrace, CSV_HEADER
from .regular import build_regular, verify_regular
from .singular import build_singular, verify_singular, build_negative, verify_negative
from .half_integer import (
    SlitTrace,
    build_half_integer,
    half_integer_trace,
    sector_energy_nullity,
    verify_half_integer,
)
from .fuzz import calibrate_singular_eps, run_campaign

__all__ = [
    "CompetitorRecipe", "ConstructionError", "EpiReport", "InadmissibleTrace", "CSV_HEADER",
    "build_regular", "verify_regular", "build_singular", "verify_singular",
    "build_negative", "verify_negative", "SlitTrace", "build_half_integer", "half_integer_trace",
    "sector_energy_nullity", "verify_half_integer", "calibrate_singular_eps", "run_campaign",
]

"""Polygon fitting over a weighted grid: model, search engine, solvers, export."""

from .engine import SearchSettings
from .export import build_rows, export_model, read_model
from .model import (COVERAGE_ATOL, Assignment, PolyModel, big_m, build_model,
                    default_coeff_bound, evaluate, implied_assignment, reduced_model)
from .solvers import (HEURISTIC_SETTINGS, EmptyRegionError, InfeasibleSampleSizeError,
                      PolySolution, bounding_box, derive_seed, full_grid_coverage,
                      optimal_settings, renormalize, solve_heuristic, solve_optimal,
                      weighted_sample)

__all__ = [
    "SearchSettings", "build_rows", "export_model", "read_model", "COVERAGE_ATOL",
    "Assignment", "PolyModel", "big_m", "build_model", "default_coeff_bound", "evaluate",
    "implied_assignment", "reduced_model", "HEURISTIC_SETTINGS", "EmptyRegionError",
    "InfeasibleSampleSizeError", "PolySolution", "bounding_box", "derive_seed",
    "full_grid_coverage", "optimal_settings", "renormalize", "solve_heuristic",
    "solve_optimal", "weighted_sample",
]

"""Differentiable relaxed linear-assignment matching.

A projected-descent solver over the relaxed matching polytope with exact
reverse-mode gradients, exact and greedy baselines for the hard problem, a
mask/feature cost model, and a benchmark CLI.
"""

from .autodiff import (
    GradcheckReport,
    GradientResult,
    finite_diff_grad,
    gradcheck,
    solve_with_grad,
)
from .cost import (
    assemble_masks,
    build_cost,
    cosine,
    iou,
    synth_features,
    synth_masks,
)
from .estimator import MatchingSolver
from .exact import (
    HardAssignment,
    brute_force,
    greedy,
    hungarian,
    round_to_hard,
)
from .matcher import (
    PRESETS,
    SolveReport,
    SolverConfig,
    TheoremBounds,
    confidence_mask,
    initial_assignment,
    make_rng,
    objective,
    preset,
    solve,
    theorem_bounds,
)
from .polytope import (
    SOLVER_FEAS_TOL,
    TAU_FEAS,
    FeasibilityReport,
    Residuals,
    dykstra_project,
    feasibility,
    project_cols,
    project_nonneg,
    project_rows,
    residuals,
)

__version__ = "0.1.0"

__all__ = [
    "GradcheckReport",
    "GradientResult",
    "finite_diff_grad",
    "gradcheck",
    "solve_with_grad",
    "assemble_masks",
    "build_cost",
    "cosine",
    "iou",
    "synth_features",
    "synth_masks",
    "MatchingSolver",
    "HardAssignment",
    "brute_force",
    "greedy",
    "hungarian",
    "round_to_hard",
    "PRESETS",
    "SolveReport",
    "SolverConfig",
    "TheoremBounds",
    "confidence_mask",
    "initial_assignment",
    "make_rng",
    "objective",
    "preset",
    "solve",
    "theorem_bounds",
    "SOLVER_FEAS_TOL",
    "TAU_FEAS",
    "FeasibilityReport",
    "Residuals",
    "dykstra_project",
    "feasibility",
    "project_cols",
    "project_nonneg",
    "project_rows",
    "residuals",
]

"""Bistable tumor-invasion fronts: construction, stability, simulation."""

__version__ = "0.1.0"

from .model import ModelParams, reaction_jet, compute_v_pm, steady_states
from .singular import build_singular_front, classify_regime, solve_w_star
from .bvp import (
    continue_front,
    default_grid,
    measure_gap_width,
    solve_front,
)
from .stability import (
    assemble_L,
    critical_curve,
    lambda2_asymptotic,
    lambda2_from_curve,
    lambda2_solvability,
    sign_criterion,
    solve_adjoint,
    spectrum_1d,
)
from .continuation import (
    BoundaryCurve,
    BranchPoint,
    ContinuationBranch,
    find_zero,
    sweep,
    trace_boundary,
)
from .simulate import (
    Field2D,
    ModeDiagnostics,
    SimConfig,
    SimResult,
    growth_rates,
    init_planar,
    interface_positions,
    run,
    stable_dt,
    step,
)

__all__ = [
    "__version__",
    "ModelParams",
    "reaction_jet",
    "compute_v_pm",
    "steady_states",
    "build_singular_front",
    "classify_regime",
    "solve_w_star",
    "solve_front",
    "continue_front",
    "default_grid",
    "measure_gap_width",
    "assemble_L",
    "spectrum_1d",
    "critical_curve",
    "solve_adjoint",
    "lambda2_solvability",
    "lambda2_asymptotic",
    "lambda2_from_curve",
    "sign_criterion",
    "BranchPoint",
    "ContinuationBranch",
    "BoundaryCurve",
    "sweep",
    "find_zero",
    "trace_boundary",
    "Field2D",
    "SimConfig",
    "SimResult",
    "ModeDiagnostics",
    "init_planar",
    "step",
    "stable_dt",
    "run",
    "interface_positions",
    "growth_rates",
]

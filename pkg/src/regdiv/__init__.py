"""Optimal dividend barriers for a two-regime surplus process with
regime-dependent bankruptcy levels: analytic solvers, an HJB grid verifier,
and a Monte Carlo cross-validation oracle."""

from .model import (
    BarrierRegime2,
    LiquidateBoth,
    LiquidationBarrier,
    ModelError,
    ModelParams,
    Ordering,
    PiecewiseValue,
    Policy,
    ValidatedParams,
    ValidationError,
    params_from_json,
    params_to_json,
    validate,
)
from .roots import CharRoots, char_roots, coefficient_ratio, quadratic_roots, quartic_roots
from .case_ab import (
    CaseBSolution,
    CaseNotApplicable,
    build_case_a,
    case_a_threshold,
    check_case_b_optimal,
    solve_case_b,
)
from .case_cd import (
    CaseCDSolution,
    NoConvergence,
    OrderingViolated,
    check_case_c_conditions,
    check_case_d_conditions,
    solve_case,
)
from .conditions import ConditionReport
from .hjb import VerificationReport, generator_residual, verify
from .policy import Action, NoVerifiedCase, Selection, immediate_action, select_policy, value_at
from .mc import SimConfig, SimEstimate, estimate_value, simulate_path, suboptimality_probe
from .sweep import emit_figure_data, reproduce_table, sweep_parameter

__version__ = "0.1.0"

__all__ = [
    "BarrierRegime2", "LiquidateBoth", "LiquidationBarrier", "ModelError",
    "ModelParams", "Ordering", "PiecewiseValue", "Policy", "ValidatedParams",
    "ValidationError", "params_from_json", "params_to_json", "validate",
    "CharRoots", "char_roots", "coefficient_ratio", "quadratic_roots",
    "quartic_roots", "CaseBSolution", "CaseNotApplicable", "build_case_a",
    "case_a_threshold", "check_case_b_optimal", "solve_case_b",
    "CaseCDSolution", "NoConvergence", "OrderingViolated",
    "check_case_c_conditions", "check_case_d_conditions", "solve_case",
    "ConditionReport", "VerificationReport", "generator_residual", "verify",
    "Action", "NoVerifiedCase", "Selection", "immediate_action",
    "select_policy", "value_at", "SimConfig", "SimEstimate", "estimate_value",
    "simulate_path", "suboptimality_probe", "emit_figure_data",
    "reproduce_table", "sweep_parameter",
]

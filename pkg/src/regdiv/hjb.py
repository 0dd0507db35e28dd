"""Grid certification of candidate value functions.

A candidate solves the coupled variational inequalities when, in each
regime, the generator inequality and the gradient constraint

    max{ 0.5 sigma_i^2 w'' + mu_i w' - (lambda_i + rho) w + lambda_i w_other - rho-part,
         1 - w' } = 0

hold on (theta_i, inf) with equality of the right member in the
intervention region and of the left member in the continuation region.
Verification here is certification-by-grid: analytic segment derivatives
are evaluated on a dense grid with extra clustering next to every pasting
point, one-sided limits are compared analytically at the pasting points
themselves, and the case-specific shape conditions are folded in.
Failures are data in the report, never exceptions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .conditions import ConditionReport, conditions_for_policy
from .model import ModelParams, PiecewiseValue, Policy, RegimeValue

__all__ = [
    "SMOOTH_FIT_TOL",
    "INEQ_TOL",
    "SmoothFitRecord",
    "RegimeGridReport",
    "VerificationReport",
    "evaluate",
    "generator_residual",
    "default_grid",
    "verify",
]

SMOOTH_FIT_TOL = 1e-9   # equality-type pasting residuals
INEQ_TOL = 1e-8         # one-sided inequality slack
_JUNCTION_OFFSET = 1e-8


def evaluate(w: PiecewiseValue, x, regime: int, deriv_order: int = 0):
    """Analytic evaluation of w or its first two derivatives; zero at and
    below the regime's bankruptcy level."""
    if deriv_order not in (0, 1, 2):
        raise ValueError("deriv_order must be 0, 1 or 2")
    return w.eval(x, regime, deriv_order)


def generator_residual(w: PiecewiseValue, x, regime: int, params: ModelParams):
    """(L - rho) w at x in the given regime, evaluated analytically.

    The coupling term uses the candidate's other-regime component; at
    pasting points the segment owning the point supplies the one-sided
    values, so callers should stay off exact junctions (the grid builder
    excludes them).
    """
    mu = params.mu(regime)
    sig = params.sigma(regime)
    lam = params.lam(regime)
    other = 2 if regime == 1 else 1
    return (
        0.5 * sig * sig * w.eval(x, regime, 2)
        + mu * w.eval(x, regime, 1)
        - (lam + params.rho) * w.eval(x, regime, 0)
        + lam * w.eval(x, other, 0)
    )


@dataclass(frozen=True)
class SmoothFitRecord:
    regime: int
    x: float
    smoothness: int
    value_jump: float
    slope_jump: float
    curvature_jump: float

    @property
    def required_max(self) -> float:
        jumps = [abs(self.value_jump), abs(self.slope_jump), abs(self.curvature_jump)]
        return max(jumps[: self.smoothness + 1])

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "x": self.x,
            "smoothness": self.smoothness,
            "jumps": [self.value_jump, self.slope_jump, self.curvature_jump],
        }


@dataclass(frozen=True)
class RegimeGridReport:
    max_generator_positive: float      # positive part of (L-rho)w, whole domain
    max_gradient_violation: float      # positive part of 1 - w', whole domain
    max_pointwise_hjb: float           # max over grid of max{(L-rho)w, 1-w'}
    max_generator_in_continuation: float
    max_slope_dev_in_intervention: float
    gradient_floor: float              # min w' where w' >= 1 is required
    min_slope: float                   # global monotonicity floor

    def to_dict(self) -> dict:
        return self.__dict__.copy()


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    smooth_fit: tuple[SmoothFitRecord, ...]
    max_smooth_fit_residual: float
    grid: dict
    concavity_max: float
    condition_report: Optional[ConditionReport]
    x0: Optional[float]
    failures: tuple[str, ...] = field(default_factory=tuple)
    grid_points: int = 0

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "smooth_fit": [rec.to_dict() for rec in self.smooth_fit],
            "max_smooth_fit_residual": self.max_smooth_fit_residual,
            "grid": {str(k): v.to_dict() for k, v in self.grid.items()},
            "concavity_max": self.concavity_max,
            "conditions": None if self.condition_report is None
            else self.condition_report.to_dict(),
            "x0": self.x0,
            "failures": list(self.failures),
            "grid_points": self.grid_points,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _policy_geometry(policy: Policy, params: ModelParams):
    """(d1 or None, b1, b2) with degenerate barriers sitting at theta."""
    return policy.barriers(params)


def default_grid(rv: RegimeValue, x_max: float, n_uniform: int) -> np.ndarray:
    """Uniform grid on (theta, x_max] plus geometric clusters flanking every
    pasting point; the points at distance < 1e-8 of a junction are excluded
    so one-sided quantities stay unambiguous."""
    lo, hi = rv.theta, x_max
    pts = [np.linspace(lo, hi, n_uniform + 1)[1:]]
    cluster = np.geomspace(_JUNCTION_OFFSET, 1e-4, 25)
    for jun in rv.junctions:
        pts.append(jun.x + cluster)
        pts.append(jun.x - cluster)
    grid = np.unique(np.concatenate(pts))
    grid = grid[(grid > lo) & (grid <= hi)]
    keep = np.ones(grid.shape, dtype=bool)
    for jun in rv.junctions:
        keep &= np.abs(grid - jun.x) >= _JUNCTION_OFFSET * 0.999
    return grid[keep]


def _smooth_fit_records(w: PiecewiseValue) -> list[SmoothFitRecord]:
    records = []
    for regime in (1, 2):
        rv = w.regime(regime)
        for jun in rv.junctions:
            jumps = [
                rv.one_sided(jun.x, order, "right") - rv.one_sided(jun.x, order, "left")
                for order in (0, 1, 2)
            ]
            records.append(
                SmoothFitRecord(
                    regime=regime, x=jun.x, smoothness=jun.smoothness,
                    value_jump=jumps[0], slope_jump=jumps[1], curvature_jump=jumps[2],
                )
            )
    return records


def verify(w: PiecewiseValue, policy: Policy, params: ModelParams,
           grid_points: int = 4000,
           condition_report: Optional[ConditionReport] = None) -> VerificationReport:
    """Certify a candidate (w, policy) pair on a grid.

    Checks, with failures collected as report data:

    * smooth fit at every pasting point to its stated continuity class,
    * (L - rho) w <= 0 and the pointwise variational inequality everywhere,
    * w' = 1 in intervention regions, w' >= 1 in continuation regions,
    * (L - rho) w = 0 in continuation regions,
    * concavity of w(., 2) up to its reflecting barrier,
    * the case's sufficient-optimality conditions (recomputed from w when not supplied).
    """
    d1, b1, b2 = _policy_geometry(policy, params)
    b_outer = max(b1, b2)
    x_max = b_outer + 5.0 * max(params.sigma1, params.sigma2) / math.sqrt(params.rho)
    failures: list[str] = []

    records = _smooth_fit_records(w)
    max_fit = max((rec.required_max for rec in records), default=0.0)
    for rec in records:
        if rec.required_max > SMOOTH_FIT_TOL:
            failures.append(
                f"smooth fit C{rec.smoothness} violated at x={rec.x:.6g} "
                f"(regime {rec.regime}): residual {rec.required_max:.3e}"
            )

    grid_report: dict[int, RegimeGridReport] = {}
    total_points = 0
    for regime in (1, 2):
        rv = w.regime(regime)
        grid = default_grid(rv, x_max, grid_points)
        total_points += grid.size
        slope = w.eval(grid, regime, 1)
        gen = generator_residual(w, grid, regime, params)

        # region classification from the policy geometry
        if regime == 1:
            if d1 is None:
                cont = np.zeros(grid.shape, dtype=bool) if b1 <= params.theta1 \
                    else (grid > params.theta1) & (grid < b1)
            else:
                cont = (grid > d1) & (grid < b1)
        else:
            cont = (grid > params.theta2) & (grid < b2)
        interv = ~cont

        max_gen_pos = float(np.max(gen, initial=-math.inf))
        max_grad_viol = float(np.max(1.0 - slope, initial=-math.inf))
        pointwise = float(np.max(np.maximum(gen, 1.0 - slope)))
        gen_cont = float(np.max(np.abs(gen[cont]), initial=0.0))
        slope_dev = float(np.max(np.abs(slope[interv] - 1.0), initial=0.0))
        floor = float(np.min(slope[cont], initial=math.inf))
        min_slope = float(np.min(slope))

        grid_report[regime] = RegimeGridReport(
            max_generator_positive=max_gen_pos,
            max_gradient_violation=max_grad_viol,
            max_pointwise_hjb=pointwise,
            max_generator_in_continuation=gen_cont,
            max_slope_dev_in_intervention=slope_dev,
            gradient_floor=floor,
            min_slope=min_slope,
        )
        if max_gen_pos > INEQ_TOL:
            failures.append(f"regime {regime}: (L-rho)w reaches {max_gen_pos:.3e} > 0")
        if pointwise > INEQ_TOL:
            failures.append(f"regime {regime}: pointwise HJB defect {pointwise:.3e}")
        if gen_cont > INEQ_TOL:
            failures.append(
                f"regime {regime}: |(L-rho)w| = {gen_cont:.3e} in continuation region"
            )
        if slope_dev > SMOOTH_FIT_TOL:
            failures.append(
                f"regime {regime}: |w'-1| = {slope_dev:.3e} in intervention region"
            )
        if floor < 1.0 - INEQ_TOL:
            failures.append(f"regime {regime}: continuation slope floor {floor:.6g} < 1")
        if min_slope < -1e-10:
            failures.append(f"regime {regime}: w decreasing (min slope {min_slope:.3e})")

    # affine tail: beyond the outer barrier (L-rho)w is affine with slope
    # -rho < 0, so nonpositivity at the barrier extends to infinity
    for regime in (1, 2):
        tail = float(generator_residual(w, b_outer + _JUNCTION_OFFSET, regime, params))
        if tail > INEQ_TOL:
            failures.append(f"regime {regime}: tail generator residual {tail:.3e} at outer barrier")

    concavity_max = 0.0
    if b2 > params.theta2:
        rv2 = w.regime(2)
        grid2 = default_grid(rv2, b2 - _JUNCTION_OFFSET, grid_points)
        grid2 = grid2[grid2 < b2]
        if grid2.size:
            concavity_max = float(np.max(w.eval(grid2, 2, 2)))
            if concavity_max > INEQ_TOL:
                failures.append(
                    f"w(.,2) not concave below its barrier: max w'' = {concavity_max:.3e}"
                )

    if condition_report is None:
        try:
            condition_report = conditions_for_policy(w, policy, params)
        except Exception as exc:  # condition machinery failures are findings
            failures.append(f"condition check failed: {exc}")
            condition_report = None
    if condition_report is not None and not condition_report.optimal:
        failures.append(
            f"optimality conditions not satisfied (case {condition_report.case_tag}, "
            f"branch {condition_report.branch or 'none'})"
        )

    return VerificationReport(
        passed=not failures,
        smooth_fit=tuple(records),
        max_smooth_fit_residual=max_fit,
        grid=grid_report,
        concavity_max=concavity_max,
        condition_report=condition_report,
        x0=None if condition_report is None else condition_report.x0,
        failures=tuple(failures),
        grid_points=total_points,
    )

"""Closed-form liquidation case and the single-barrier case.

Case A (liquidate in both regimes) applies exactly when
``mu2 <= (theta1 - theta2) * lambda2``; the value function is affine.

Case B keeps the business alive in regime 2 behind a reflecting barrier b2
and liquidates immediately in regime 1.  The barrier solves a scalar
smooth-fit equation F(b2) = 0 with F strictly decreasing, so bracketed
bisection plus a Newton polish is globally convergent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conditions import ConditionReport, check_b_value
from .model import (
    BarrierRegime2,
    Junction,
    LiquidateBoth,
    ModelError,
    PiecewiseValue,
    RegimeValue,
    Segment,
    ValidatedParams,
)
from .roots import quadratic_roots

__all__ = [
    "CaseNotApplicable",
    "BracketFailure",
    "CaseBSolution",
    "case_a_threshold",
    "build_case_a",
    "solve_case_b",
    "candidate_case_b",
    "check_case_b_optimal",
    "remark_sufficient_bound",
]


class CaseNotApplicable(ModelError):
    """The parameter set is outside this case's applicability region."""


class BracketFailure(ModelError):
    """The scalar smooth-fit equation had no sign change to bracket."""


def case_a_threshold(params: ValidatedParams) -> float:
    """Largest mu2 for which immediate liquidation in both regimes is optimal."""
    return (params.theta1 - params.theta2) * params.lambda2


def build_case_a(params: ValidatedParams) -> tuple[PiecewiseValue, LiquidateBoth]:
    """Affine value function of the liquidate-everywhere policy."""
    if params.mu2 > case_a_threshold(params):
        raise CaseNotApplicable(
            f"mu2={params.mu2} exceeds the liquidation threshold "
            f"{case_a_threshold(params)}"
        )
    r1 = RegimeValue(
        theta=params.theta1,
        segments=(Segment(params.theta1, math.inf, slope=1.0, intercept=-params.theta1),),
        junctions=(Junction(params.theta1, 0),),
    )
    r2 = RegimeValue(
        theta=params.theta2,
        segments=(Segment(params.theta2, math.inf, slope=1.0, intercept=-params.theta2),),
        junctions=(Junction(params.theta2, 0),),
    )
    return PiecewiseValue(r1, r2), LiquidateBoth()


@dataclass(frozen=True)
class CaseBSolution:
    """Barrier level, coefficients and assembled value function for Case B."""

    b2: float
    C1: float
    C2: float
    K1: float
    value: PiecewiseValue
    policy: BarrierRegime2
    system_residual: float

    def to_dict(self) -> dict:
        return {
            "b2": self.b2,
            "C1": self.C1,
            "C2": self.C2,
            "K1": self.K1,
            "system_residual": self.system_residual,
        }


def _affine_part(params: ValidatedParams) -> tuple[float, float]:
    """Intercept and slope of the particular solution driven by regime-1
    liquidation value x - theta1 in the regime-2 continuation ODE."""
    lam2, rho = params.lambda2, params.rho
    intercept = lam2 * params.mu2 / (rho + lam2) ** 2 - lam2 * params.theta1 / (rho + lam2)
    slope = lam2 / (rho + lam2)
    return intercept, slope


def barrier_equation(params: ValidatedParams):
    """The reduced scalar smooth-fit equation F and its derivative.

    F(x) = (a8^2/a7^2) e^{-a7 x} - e^{(a8-a7) theta2 - a8 x} - const, where
    the constant collects the inhomogeneity
    P = mu2 lam2/(lam2+rho)^2 + lam2 (theta2-theta1)/(lam2+rho).
    F(theta2) > 0 iff mu2 exceeds the liquidation threshold, F is strictly
    decreasing, and F(+inf) = -inf, so the barrier is its unique zero.
    """
    a7, a8 = quadratic_roots(params.mu2, params.sigma2, params.lambda2, params.rho)
    lam2, rho, th1, th2 = params.lambda2, params.rho, params.theta1, params.theta2
    P = params.mu2 * lam2 / (lam2 + rho) ** 2 + lam2 * (th2 - th1) / (lam2 + rho)
    const = P / (rho * a7) * ((rho + lam2) * (a7 * a8 - a8 * a8) * math.exp(-a7 * th2))
    ratio = a8 * a8 / (a7 * a7)
    shift = (a8 - a7) * th2

    # the -exp(shift - a8 x) term dominates as x grows; saturate instead of
    # letting math.exp raise during bracket expansion
    def F(x: float) -> float:
        arg = shift - a8 * x
        if arg > 700.0:
            return -math.inf
        return ratio * math.exp(min(-a7 * x, 700.0)) - math.exp(arg) - const

    def Fprime(x: float) -> float:
        return -a7 * ratio * math.exp(-a7 * x) + a8 * math.exp(shift - a8 * x)

    return F, Fprime


def solve_case_b(params: ValidatedParams) -> CaseBSolution:
    """Solve the four-equation smooth-fit system through its scalar reduction.

    Applicable iff mu2 > (theta1 - theta2) lambda2; the returned coefficients
    satisfy C1 > 0 > C2 and reproduce all four original equations to 1e-9.
    """
    if params.mu2 <= case_a_threshold(params):
        raise CaseNotApplicable(
            f"mu2={params.mu2} is at or below the liquidation threshold; "
            "the single-barrier case requires strictly larger drift"
        )
    a7, a8 = quadratic_roots(params.mu2, params.sigma2, params.lambda2, params.rho)
    th2 = params.theta2
    F, Fprime = barrier_equation(params)

    lo = th2 + 1e-10
    if F(lo) <= 0.0:
        raise BracketFailure(f"F({lo}) = {F(lo)} <= 0 despite mu2 above threshold")
    width = 10.0 * (params.theta2 - params.theta1 + 1.0)
    hi = th2 + width
    for _ in range(60):
        if F(hi) < 0.0:
            break
        hi = th2 + (hi - th2) * 2.0
    else:
        raise BracketFailure("no sign change of F found under bracket expansion")

    a, b = lo, hi
    fa = F(a)
    while b - a > 1e-14 * max(1.0, abs(b)):
        m = 0.5 * (a + b)
        fm = F(m)
        if fm == 0.0:
            a = b = m
            break
        if fa * fm < 0.0:
            b = m
        else:
            a, fa = m, fm
    b2 = 0.5 * (a + b)
    for _ in range(3):
        b2 -= F(b2) / Fprime(b2)
    # F is a difference of exponential terms; 1e-12 is meaningful relative to
    # the equation's own magnitude, not absolutely
    f_scale = max(1.0, abs(F(th2)))
    if abs(F(b2)) > 1e-12 * f_scale:
        raise BracketFailure(f"barrier polish left |F(b2)| = {abs(F(b2))}")

    lam2, rho = params.lambda2, params.rho
    C2 = a7 * rho / ((rho + lam2) * a8 * (a7 - a8) * math.exp(a8 * b2))
    C1 = -C2 * (a8 * a8 / (a7 * a7)) * math.exp((a8 - a7) * b2)
    intercept, slope = _affine_part(params)
    K1 = (
        C1 * math.exp(a7 * b2)
        + C2 * math.exp(a8 * b2)
        + intercept
        + slope * b2
        - b2
    )

    # Residuals of the original four equations: continuity at theta2, then
    # C0/C1/C2 pasting onto x + K1 at the barrier.
    e7t, e8t = math.exp(a7 * th2), math.exp(a8 * th2)
    e7b, e8b = math.exp(a7 * b2), math.exp(a8 * b2)
    resid = max(
        abs(C1 * e7t + C2 * e8t + intercept + slope * th2),
        abs(C1 * e7b + C2 * e8b + intercept + slope * b2 - (b2 + K1)),
        abs(C1 * a7 * e7b + C2 * a8 * e8b + slope - 1.0),
        abs(C1 * a7 * a7 * e7b + C2 * a8 * a8 * e8b),
    )
    if resid > 1e-9:
        raise BracketFailure(f"smooth-fit system residual {resid} above 1e-9")
    if not (C1 > 0.0 > C2):
        raise BracketFailure(f"coefficient signs C1={C1}, C2={C2} violate C1>0>C2")

    r1 = RegimeValue(
        theta=params.theta1,
        segments=(Segment(params.theta1, math.inf, slope=1.0, intercept=-params.theta1),),
        junctions=(Junction(params.theta1, 0),),
    )
    r2 = RegimeValue(
        theta=th2,
        segments=(
            Segment(th2, b2, exponents=(a7, a8), coefficients=(C1, C2),
                    intercept=intercept, slope=slope),
            Segment(b2, math.inf, slope=1.0, intercept=K1),
        ),
        junctions=(Junction(th2, 0), Junction(b2, 2)),
    )
    value = PiecewiseValue(r1, r2)
    return CaseBSolution(
        b2=b2, C1=C1, C2=C2, K1=K1, value=value,
        policy=BarrierRegime2(b2=b2), system_residual=resid,
    )


def candidate_case_b(params: ValidatedParams, b2: float) -> CaseBSolution:
    """Best-effort single-barrier candidate at an arbitrary barrier level.

    Pins continuity at theta2, unit slope at the barrier and the affine
    pasting; the curvature condition at the barrier is left to fall where it
    may, so verifying a hand-supplied b2 surfaces exactly that residual.
    """
    if b2 <= params.theta2:
        raise CaseNotApplicable(f"b2={b2} must exceed theta2={params.theta2}")
    a7, a8 = quadratic_roots(params.mu2, params.sigma2, params.lambda2, params.rho)
    intercept, slope = _affine_part(params)
    th2 = params.theta2
    M = np.array([
        [math.exp(a7 * th2), math.exp(a8 * th2), 0.0],
        [a7 * math.exp(a7 * b2), a8 * math.exp(a8 * b2), 0.0],
        [math.exp(a7 * b2), math.exp(a8 * b2), -1.0],
    ])
    r = np.array([-(intercept + slope * th2), 1.0 - slope, b2 - intercept - slope * b2])
    C1, C2, K1 = (float(v) for v in np.linalg.solve(M, r))
    resid = abs(C1 * a7 * a7 * math.exp(a7 * b2) + C2 * a8 * a8 * math.exp(a8 * b2))
    r1 = RegimeValue(
        theta=params.theta1,
        segments=(Segment(params.theta1, math.inf, slope=1.0, intercept=-params.theta1),),
        junctions=(Junction(params.theta1, 0),),
    )
    r2 = RegimeValue(
        theta=th2,
        segments=(
            Segment(th2, b2, exponents=(a7, a8), coefficients=(C1, C2),
                    intercept=intercept, slope=slope),
            Segment(b2, math.inf, slope=1.0, intercept=K1),
        ),
        junctions=(Junction(th2, 0), Junction(b2, 2)),
    )
    return CaseBSolution(b2=float(b2), C1=C1, C2=C2, K1=K1,
                         value=PiecewiseValue(r1, r2),
                         policy=BarrierRegime2(b2=float(b2)), system_residual=resid)


def remark_sufficient_bound(params: ValidatedParams) -> float:
    """Upper drift bound under which Case B optimality needs no x0 search."""
    lam1, lam2, rho = params.lambda1, params.lambda2, params.rho
    gap = params.theta2 - params.theta1
    return (gap * ((lam1 + rho) * (lam2 + rho) - lam1 * lam2) - (lam2 + rho) * params.mu1) / lam1


def check_case_b_optimal(params: ValidatedParams, sol: CaseBSolution) -> ConditionReport:
    """Evaluate the two equivalent optimality conditions for Case B.

    Either the right slope of w(., 2) at theta2 is at most
    (lambda1 + rho)/lambda1, or the auxiliary function GH is nonpositive at
    the unique interior point x0 where the slope crosses that level.  The
    report carries the closed-form drift bound under which the first branch
    is guaranteed without any search.
    """
    return check_b_value(
        sol.value, params, sol.b2, sufficient_mu2_bound=remark_sufficient_bound(params)
    )

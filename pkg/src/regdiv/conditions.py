"""Sufficient-optimality condition checks shared by the case solvers.

Cases B, C and D all hinge on the same auxiliary function

    GH(x) = mu_1 - (lambda_1 + rho) w(x, 1) + lambda_1 w(x, 2)

whose sign on a stated interval, possibly at the interior point x0 where
w'(x0, 2) equals the critical slope (lambda_1 + rho)/lambda_1, certifies
that the candidate solves the variational inequality in regime 1.  The
checkers here work directly on a candidate value function and the policy
boundaries, so they can run both on freshly solved cases and on
user-supplied candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .model import (
    BarrierRegime2,
    LiquidateBoth,
    LiquidationBarrier,
    ModelError,
    ModelParams,
    PiecewiseValue,
    Policy,
)

__all__ = [
    "X0NotBracketed",
    "ConditionReport",
    "gh_function",
    "critical_slope",
    "locate_x0",
    "check_b_value",
    "check_c_value",
    "check_d_value",
    "conditions_for_policy",
]

_X_TOL = 1e-10


class X0NotBracketed(ModelError):
    """The critical-slope crossing could not be bracketed where required."""


def critical_slope(params: ModelParams) -> float:
    return (params.lambda1 + params.rho) / params.lambda1


def gh_function(w: PiecewiseValue, params: ModelParams, x, order: int = 0):
    """GH(x) (order 0) or its derivative (order 1), from analytic segment
    derivatives of the candidate value function."""
    base = params.mu1 if order == 0 else 0.0
    return (
        base
        - (params.lambda1 + params.rho) * w.eval(x, 1, order)
        + params.lambda1 * w.eval(x, 2, order)
    )


def locate_x0(w: PiecewiseValue, params: ModelParams, lo: float, hi: float) -> float:
    """Bisect for the unique x0 in (lo, hi) with w'(x0, 2) = critical slope.

    Concavity of w(., 2) on the search interval makes the slope monotone, so
    a sign change of w' minus the critical slope brackets exactly one root.
    """
    thr = critical_slope(params)
    g = lambda x: w.regime2.one_sided(x, 1, "right") - thr
    a = lo + 1e-12 * max(1.0, abs(lo))
    b = hi - 1e-12 * max(1.0, abs(hi))
    fa, fb = g(a), g(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise X0NotBracketed(
            f"w'(x,2) - {thr} has no sign change on ({lo}, {hi}): "
            f"endpoints {fa:+.3e}, {fb:+.3e}"
        )
    while b - a > _X_TOL:
        m = 0.5 * (a + b)
        fm = g(m)
        if fm == 0.0:
            return m
        if fa * fm < 0.0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of a sufficient-optimality check for one solved case."""

    case_tag: str
    optimal: bool
    slope_at_theta2: float
    slope_threshold: float
    hypothesis_ok: bool = True
    branch: str = ""
    x0: Optional[float] = None
    gh_at_x0: Optional[float] = None
    gh_prime_at_d1: Optional[float] = None
    sufficient_mu2_bound: Optional[float] = None
    c6: Optional[float] = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "case": self.case_tag,
            "optimal": self.optimal,
            "slope_at_theta2": self.slope_at_theta2,
            "slope_threshold": self.slope_threshold,
            "hypothesis_ok": self.hypothesis_ok,
            "branch": self.branch,
            "x0": self.x0,
            "gh_at_x0": self.gh_at_x0,
            "gh_prime_at_d1": self.gh_prime_at_d1,
            "sufficient_mu2_bound": self.sufficient_mu2_bound,
            "c6": self.c6,
            "notes": list(self.notes),
        }


def check_b_value(w: PiecewiseValue, params: ModelParams, b2: float,
                  sufficient_mu2_bound: Optional[float] = None) -> ConditionReport:
    """Single-barrier optimality: either the right slope of w(., 2) at
    theta2 stays at or below the critical slope, or GH is nonpositive at the
    unique interior critical-slope point x0 in (theta2, b2)."""
    thr = critical_slope(params)
    s = w.regime2.one_sided(params.theta2, 1, "right")
    if s <= thr:
        return ConditionReport(
            case_tag="B", optimal=True, slope_at_theta2=s, slope_threshold=thr,
            branch="slope_below_threshold", sufficient_mu2_bound=sufficient_mu2_bound,
        )
    x0 = locate_x0(w, params, params.theta2, b2)
    g0 = float(gh_function(w, params, x0))
    return ConditionReport(
        case_tag="B", optimal=bool(g0 <= 0.0), slope_at_theta2=s, slope_threshold=thr,
        branch="gh_at_x0", x0=x0, gh_at_x0=g0,
        sufficient_mu2_bound=sufficient_mu2_bound,
    )


def check_c_value(w: PiecewiseValue, params: ModelParams, d1: float,
                  c6: float, c6_rel: float) -> ConditionReport:
    """Liquidation level above theta2.

    Hypotheses: right slope of w(., 2) at theta2 at least 1 and a nonzero
    leading quartic coefficient.  Then any of: (i) that slope at most the
    critical level, (ii) GH(x0) <= 0 at the interior critical-slope point in
    (theta2, d1), (iii) GH'(d1) >= 0.
    """
    thr = critical_slope(params)
    s = w.regime2.one_sided(params.theta2, 1, "right")
    hyp = bool(s >= 1.0 - 1e-12 and c6_rel > 1e-14)
    notes = []
    if not hyp:
        notes.append("hypothesis failed: slope at theta2 below 1 or C6 ~ 0")
    # GH' is continuous at d1 (both slopes paste C1 there); take the left limit.
    hprime_d1 = (
        -(params.lambda1 + params.rho) * w.regime1.one_sided(d1, 1, "left")
        + params.lambda1 * w.regime2.one_sided(d1, 1, "left")
    )
    if s <= thr:
        return ConditionReport(
            case_tag="C", optimal=hyp, slope_at_theta2=s, slope_threshold=thr,
            hypothesis_ok=hyp, branch="slope_below_threshold",
            gh_prime_at_d1=hprime_d1, c6=c6, notes=tuple(notes),
        )
    x0 = None
    h0 = None
    if w.regime2.one_sided(d1, 1, "left") < thr:
        x0 = locate_x0(w, params, params.theta2, d1)
        h0 = float(gh_function(w, params, x0))
    cond2 = h0 is not None and h0 <= 0.0
    cond3 = hprime_d1 >= 0.0
    branch = "gh_at_x0" if cond2 else ("gh_prime_at_d1" if cond3 else "none")
    return ConditionReport(
        case_tag="C", optimal=bool(hyp and (cond2 or cond3)),
        slope_at_theta2=s, slope_threshold=thr, hypothesis_ok=hyp,
        branch=branch, x0=x0, gh_at_x0=h0, gh_prime_at_d1=hprime_d1,
        c6=c6, notes=tuple(notes),
    )


def check_d_value(w: PiecewiseValue, params: ModelParams, d1: float, b1: float,
                  b2: float, c6: float, c6_rel: float) -> ConditionReport:
    """Liquidation level between the bankruptcy levels: nonnegative right
    slope of w(., 2) at theta2, strict boundary ordering, C6 nonzero."""
    s = w.regime2.one_sided(params.theta2, 1, "right")
    ordered = params.theta1 < d1 < params.theta2 < min(b1, b2)
    c6_ok = c6_rel > 1e-14
    notes = []
    if not ordered:
        notes.append("boundaries not strictly ordered")
    if not c6_ok:
        notes.append("C6 ~ 0")
    return ConditionReport(
        case_tag="D", optimal=bool(s >= 0.0 and ordered and c6_ok),
        slope_at_theta2=s, slope_threshold=0.0,
        hypothesis_ok=bool(ordered and c6_ok), branch="slope_nonnegative",
        c6=c6, notes=tuple(notes),
    )


def quartic_leading_term(w: PiecewiseValue) -> tuple[float, float]:
    """Leading quartic coefficient and its relative contribution.

    Raw coefficient magnitudes are incomparable across exponents (a term
    c exp(a x) with large a carries a tiny c), so the nonzero-ness measure is
    each term's largest absolute value over the segment, read off the
    regime-1 four-exponential piece.
    """
    for seg in w.regime1.segments:
        if len(seg.exponents) == 4:
            lo, hi = seg.x_lo, seg.x_hi
            contribs = [
                abs(c) * math.exp(min(max(a * lo, a * hi), 700.0))
                for a, c in zip(seg.exponents, seg.coefficients)
            ]
            idx = max(range(4), key=lambda j: seg.exponents[j])
            c6 = seg.coefficients[idx]
            rel = contribs[idx] / max(max(contribs), 1e-300)
            return float(c6), float(rel)
    return 0.0, 0.0


def conditions_for_policy(w: PiecewiseValue, policy: Policy,
                          params: ModelParams) -> ConditionReport:
    """Dispatch the right optimality check for a candidate (w, policy) pair."""
    if isinstance(policy, LiquidateBoth):
        threshold = (params.theta1 - params.theta2) * params.lambda2
        ok = params.mu2 <= threshold
        return ConditionReport(
            case_tag="A", optimal=bool(ok),
            slope_at_theta2=w.regime2.one_sided(params.theta2, 1, "right"),
            slope_threshold=critical_slope(params),
            branch="mu2_below_liquidation_threshold" if ok else "none",
            notes=() if ok else (f"mu2={params.mu2} above threshold {threshold}",),
        )
    if isinstance(policy, BarrierRegime2):
        return check_b_value(w, params, policy.b2)
    if isinstance(policy, LiquidationBarrier):
        c6, c6_rel = quartic_leading_term(w)
        if policy.ordering.case_tag == "C":
            return check_c_value(w, params, policy.d1, c6, c6_rel)
        return check_d_value(w, params, policy.d1, policy.b1, policy.b2, c6, c6_rel)
    raise TypeError(f"unknown policy type {type(policy)!r}")

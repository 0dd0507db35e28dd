"""Case dispatch: find the first candidate whose certification passes.

Candidates are tried in a fixed ladder: immediate liquidation, single
barrier, liquidation-barrier with the level above theta2 (both barrier
orderings), then with the level between the bankruptcy levels (both
orderings).  Each stage solves, checks its sufficient-optimality conditions, and runs the
grid verifier; the first fully certified candidate wins.  The ladder order
makes ties at case-transition drifts resolve toward the simpler case.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from . import case_ab, case_cd
from .hjb import VerificationReport, verify
from .model import (
    ModelError,
    Ordering,
    PiecewiseValue,
    Policy,
    ValidatedParams,
    policy_to_dict,
)

__all__ = ["NoVerifiedCase", "Selection", "Action", "BANKRUPT",
           "select_policy", "value_at", "immediate_action"]


class NoVerifiedCase(ModelError):
    """No candidate case produced a certified optimal policy."""

    def __init__(self, message: str, attempts: dict[str, str]):
        super().__init__(message)
        self.attempts = attempts


@dataclass(frozen=True)
class Selection:
    """A certified policy with its value function and certification report."""

    case_tag: str
    policy: Policy
    value: PiecewiseValue
    report: VerificationReport
    params: ValidatedParams = None
    solution: object = None
    attempts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        coeffs = None
        if self.solution is not None and hasattr(self.solution, "to_dict"):
            coeffs = self.solution.to_dict()
        return {
            "case": self.case_tag,
            "policy": policy_to_dict(self.policy),
            "coefficients": coeffs,
            "report": self.report.to_dict(),
            "attempts": dict(self.attempts),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


_CD_LADDER = (
    ("C", Ordering.C_B2_LT_B1),
    ("C", Ordering.C_B1_LT_B2),
    ("D", Ordering.D_B2_LT_B1),
    ("D", Ordering.D_B1_LT_B2),
)


def select_policy(params: ValidatedParams, grid_points: int = 4000,
                  seed_hints: Optional[dict] = None) -> Selection:
    """Dispatch the case ladder and return the first certified candidate.

    ``seed_hints`` optionally maps an ordering to a warm-start boundary
    triple (d1, b1, b2), used by sweep continuation.  Raises
    :class:`NoVerifiedCase` with per-case failure notes when no candidate
    certifies; per the underlying theory this outcome is possible since
    existence of a solved system is not guaranteed.
    """
    attempts: dict[str, str] = {}
    seed_hints = seed_hints or {}

    if params.mu2 <= case_ab.case_a_threshold(params):
        value, pol = case_ab.build_case_a(params)
        report = verify(value, pol, params, grid_points=grid_points)
        if report.passed:
            return Selection("A", pol, value, report, params, None, attempts)
        attempts["A"] = "; ".join(report.failures)
    else:
        attempts["A"] = "mu2 above the liquidation threshold"

        try:
            sol_b = case_ab.solve_case_b(params)
            cond = case_ab.check_case_b_optimal(params, sol_b)
            report = verify(sol_b.value, sol_b.policy, params,
                            grid_points=grid_points, condition_report=cond)
            if report.passed:
                return Selection("B", sol_b.policy, sol_b.value, report, params, sol_b, attempts)
            attempts["B"] = "; ".join(report.failures)
        except ModelError as exc:
            attempts["B"] = str(exc)

        if params.mu2 >= 0.0:
            for tag, ordering in _CD_LADDER:
                key = ordering.value
                try:
                    sol = case_cd.solve_case(tag, ordering, params,
                                             seed_hint=seed_hints.get(ordering))
                except ModelError as exc:
                    attempts[key] = str(exc)
                    continue
                if tag == "C":
                    cond = case_cd.check_case_c_conditions(params, sol)
                else:
                    cond = case_cd.check_case_d_conditions(params, sol)
                report = verify(sol.value, sol.policy, params,
                                grid_points=grid_points, condition_report=cond)
                if report.passed:
                    return Selection(tag, sol.policy, sol.value, report, params, sol, attempts)
                attempts[key] = "; ".join(report.failures)
        else:
            attempts["C"] = attempts["D"] = "liquidation-barrier cases need mu2 >= 0"

    raise NoVerifiedCase(
        "no case produced a certified optimal policy for these parameters",
        attempts,
    )


def value_at(selection: Selection, x: float, regime: int) -> float:
    """The certified value function, zero at and below the bankruptcy level."""
    return float(selection.value.eval(x, regime, 0))


BANKRUPT = "bankrupt"


@dataclass(frozen=True)
class Action:
    """One lump decision of the certified policy at a state."""

    payout: float
    resulting_state: float | str

    @property
    def bankrupt(self) -> bool:
        return self.resulting_state == BANKRUPT


def immediate_action(selection_or_policy, x: float, regime: int,
                     params: ValidatedParams = None) -> Action:
    """The lump payout the policy prescribes right now at (x, regime).

    Below the bankruptcy level nothing is paid; in a regime-1 liquidation
    zone the full distance to theta1 is paid and the firm closes; above the
    regime's barrier the overflow is paid; inside the continuation region
    the state is left alone.  Barriers sitting at the bankruptcy level make
    reflection and liquidation coincide.  ``params`` may be omitted when a
    full selection is passed.
    """
    if isinstance(selection_or_policy, Selection):
        policy = selection_or_policy.policy
        params = selection_or_policy.params if params is None else params
    else:
        policy = selection_or_policy
    if params is None:
        raise TypeError("immediate_action needs params when given a bare policy")
    theta = params.theta(regime)
    if x <= theta:
        return Action(0.0, BANKRUPT)
    d1, b1, b2 = policy.barriers(params)
    if regime == 1 and d1 is not None and x <= d1:
        return Action(x - params.theta1, BANKRUPT)
    barrier = b1 if regime == 1 else b2
    if x > barrier:
        payout = x - barrier
        if barrier <= theta:
            return Action(x - theta, BANKRUPT)
        return Action(payout, barrier)
    return Action(0.0, x)

"""Liquidation-barrier cases: 13-unknown smooth-fit systems.

Both cases share one structure: three free boundaries (a regime-1
liquidation level d1 and two reflecting barriers b1, b2) plus ten linear
coefficients (two inner homogeneous coefficients, four coupled quartic
coefficients, two outer homogeneous coefficients and two affine intercepts
K1, K2).  The thirteen pasting equations are linear in the coefficients once
the boundaries are fixed, so the solver eliminates them with a least-squares
projection and runs a damped Gauss-Newton iteration on the three boundaries
alone, reparametrized through strictly positive gaps so every iterate stays
inside the admissible ordering cone.  A full 13-dimensional damped Newton on
the raw unknowns is kept as an independent cross-check.

Case "C" places the liquidation level above theta2
(theta1 < theta2 < d1 < barriers); case "D" places it between the
bankruptcy levels (theta1 < d1 < theta2 < barriers).  Either reflecting
barrier may be the outer one; both orderings are exposed and the verifier
arbitrates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .case_ab import CaseNotApplicable, solve_case_b
from .conditions import ConditionReport, check_c_value, check_d_value
from .model import (
    Junction,
    LiquidationBarrier,
    ModelError,
    Ordering,
    PiecewiseValue,
    RegimeValue,
    Segment,
    ValidatedParams,
)
from .roots import char_roots

__all__ = [
    "NoConvergence",
    "OrderingViolated",
    "CaseCDSolution",
    "residuals",
    "solve_case",
    "candidate_at_boundaries",
    "refine_full_newton",
    "check_case_c_conditions",
    "check_case_d_conditions",
    "ORDERINGS",
]

ORDERINGS = {
    ("C", True): Ordering.C_B2_LT_B1,
    ("C", False): Ordering.C_B1_LT_B2,
    ("D", True): Ordering.D_B2_LT_B1,
    ("D", False): Ordering.D_B1_LT_B2,
}

_RESID_TOL = 1e-9
_MIN_GAP = 1e-9
_CONE_PENALTY = 1e3
# Gap logs are clipped so exp() stays finite during wild line-search steps.
_U_MIN = -34.0


class NoConvergence(ModelError):
    """Every multistart failed to drive the smooth-fit residuals to zero."""


class OrderingViolated(ModelError):
    """A candidate converged but its boundaries collapsed out of the cone."""


@dataclass(frozen=True)
class _System:
    """Frozen per-parameter-set quantities used by all residual evaluations."""

    params: ValidatedParams
    a1: float
    a2: float
    a7: float
    a8: float
    quartic: tuple[float, float, float, float]
    ratios: tuple[float, float, float, float]
    # particular-solution pieces: regime-2 ODE driven by (x - theta1), and
    # each regime's ODE driven by (x + K1)
    i2: float
    s2: float
    i1k: float
    s1: float
    i2k: float


def _system(params: ValidatedParams) -> _System:
    roots = char_roots(params)
    lam1, lam2, rho = params.lambda1, params.lambda2, params.rho
    s2 = lam2 / (rho + lam2)
    s1 = lam1 / (rho + lam1)
    i2 = lam2 * params.mu2 / (rho + lam2) ** 2 - lam2 * params.theta1 / (rho + lam2)
    i1k = lam1 * params.mu1 / (rho + lam1) ** 2
    i2k = lam2 * params.mu2 / (rho + lam2) ** 2
    return _System(
        params=params,
        a1=roots.alpha1,
        a2=roots.alpha2,
        a7=roots.alpha7,
        a8=roots.alpha8,
        quartic=roots.quartic,
        ratios=roots.ratios,
        i2=i2,
        s2=s2,
        i1k=i1k,
        s1=s1,
        i2k=i2k,
    )


# Internal coefficient layout (columns of the 13x10 linear system):
#   0,1  inner homogeneous pair   (regime-2 a7/a8 span for C, regime-1 a1/a2
#                                  span on (d1, theta2] for D)
#   2-5  regime-1 quartic coefficients (regime-2 ones are ratio * these)
#   6,7  outer homogeneous pair   (a1/a2 if b2 < b1, a7/a8 if b1 < b2)
#   8    K1   (intercept behind the inner barrier)
#   9    K2   (intercept behind the outer barrier)


def _pair_cols(sys: _System, cols: tuple[int, int], alphas: tuple[float, float],
               x: float, order: int, row: np.ndarray) -> None:
    for col, a in zip(cols, alphas):
        row[col] += a**order * math.exp(a * x)


def _quartic_cols(sys: _System, x: float, order: int, regime: int, row: np.ndarray,
                  sign: float = 1.0) -> None:
    for j, a in enumerate(sys.quartic):
        weight = sys.ratios[j] if regime == 2 else 1.0
        row[2 + j] += sign * weight * a**order * math.exp(a * x)


def _linear_system(sys: _System, case_tag: str, own_barrier_last: bool,
                   d1: float, b_inner: float, b_outer: float) -> tuple[np.ndarray, np.ndarray]:
    """Assemble the 13x10 pasting system M c = r for fixed boundaries."""
    p = sys.params
    th1, th2 = p.theta1, p.theta2
    M = np.zeros((13, 10))
    r = np.zeros(13)
    pair1 = (sys.a1, sys.a2)
    pair2 = (sys.a7, sys.a8)
    k = 0

    def row() -> np.ndarray:
        return M[k]

    if case_tag == "C":
        # regime 1 joins the quartic span at d1 with matching value and slope
        _quartic_cols(sys, d1, 0, 1, row()); r[k] = d1 - th1; k += 1
        _quartic_cols(sys, d1, 1, 1, row()); r[k] = 1.0; k += 1
    else:
        # regime 1 leaves the liquidation line onto its own homogeneous span
        _pair_cols(sys, (0, 1), pair1, d1, 0, row()); r[k] = d1 - th1; k += 1
        _pair_cols(sys, (0, 1), pair1, d1, 1, row()); r[k] = 1.0; k += 1
        # and joins the quartic span at theta2 with value and slope
        _pair_cols(sys, (0, 1), pair1, th2, 0, row())
        _quartic_cols(sys, th2, 0, 1, row(), sign=-1.0); r[k] = 0.0; k += 1
        _pair_cols(sys, (0, 1), pair1, th2, 1, row())
        _quartic_cols(sys, th2, 1, 1, row(), sign=-1.0); r[k] = 0.0; k += 1

    if own_barrier_last:
        # regime 1 continues past b2 = b_inner on its a1/a2 span and pastes
        # C2-smoothly onto x + K2 at its own barrier b1 = b_outer
        _quartic_cols(sys, b_inner, 0, 1, row())
        _pair_cols(sys, (6, 7), pair1, b_inner, 0, row()); M[k, 6:8] *= -1.0
        M[k, 8] -= sys.s1; r[k] = sys.i1k + sys.s1 * b_inner; k += 1
        _quartic_cols(sys, b_inner, 1, 1, row())
        tmp = np.zeros(10); _pair_cols(sys, (6, 7), pair1, b_inner, 1, tmp)
        M[k] -= tmp; r[k] = sys.s1; k += 1
        _pair_cols(sys, (6, 7), pair1, b_outer, 0, row())
        M[k, 8] += sys.s1; M[k, 9] = -1.0
        r[k] = b_outer - sys.i1k - sys.s1 * b_outer; k += 1
        _pair_cols(sys, (6, 7), pair1, b_outer, 1, row()); r[k] = 1.0 - sys.s1; k += 1
        _pair_cols(sys, (6, 7), pair1, b_outer, 2, row()); r[k] = 0.0; k += 1
    else:
        # regime 1 pastes C2-smoothly onto x + K1 at its own barrier b1 = b_inner
        _quartic_cols(sys, b_inner, 0, 1, row()); M[k, 8] = -1.0; r[k] = b_inner; k += 1
        _quartic_cols(sys, b_inner, 1, 1, row()); r[k] = 1.0; k += 1
        _quartic_cols(sys, b_inner, 2, 1, row()); r[k] = 0.0; k += 1

    # regime 2 leaves zero continuously at theta2
    if case_tag == "C":
        _pair_cols(sys, (0, 1), pair2, th2, 0, row())
        r[k] = -(sys.i2 + sys.s2 * th2); k += 1
        # and joins the quartic span at d1 with value and slope
        _pair_cols(sys, (0, 1), pair2, d1, 0, row())
        _quartic_cols(sys, d1, 0, 2, row(), sign=-1.0)
        r[k] = -(sys.i2 + sys.s2 * d1); k += 1
        _pair_cols(sys, (0, 1), pair2, d1, 1, row())
        _quartic_cols(sys, d1, 1, 2, row(), sign=-1.0)
        r[k] = -sys.s2; k += 1
    else:
        _quartic_cols(sys, th2, 0, 2, row()); r[k] = 0.0; k += 1

    if own_barrier_last:
        # regime 2 pastes C2-smoothly onto x + K1 at its own barrier b2 = b_inner
        _quartic_cols(sys, b_inner, 0, 2, row()); M[k, 8] = -1.0; r[k] = b_inner; k += 1
        _quartic_cols(sys, b_inner, 1, 2, row()); r[k] = 1.0; k += 1
        _quartic_cols(sys, b_inner, 2, 2, row()); r[k] = 0.0; k += 1
    else:
        # regime 2 continues past b1 = b_inner on its a7/a8 span and pastes
        # C2-smoothly onto x + K2 at its own barrier b2 = b_outer
        _quartic_cols(sys, b_inner, 0, 2, row())
        tmp = np.zeros(10); _pair_cols(sys, (6, 7), pair2, b_inner, 0, tmp)
        M[k] -= tmp; M[k, 8] -= sys.s2; r[k] = sys.i2k + sys.s2 * b_inner; k += 1
        _quartic_cols(sys, b_inner, 1, 2, row())
        tmp = np.zeros(10); _pair_cols(sys, (6, 7), pair2, b_inner, 1, tmp)
        M[k] -= tmp; r[k] = sys.s2; k += 1
        _pair_cols(sys, (6, 7), pair2, b_outer, 0, row())
        M[k, 8] += sys.s2; M[k, 9] = -1.0
        r[k] = b_outer - sys.i2k - sys.s2 * b_outer; k += 1
        _pair_cols(sys, (6, 7), pair2, b_outer, 1, row()); r[k] = 1.0 - sys.s2; k += 1
        _pair_cols(sys, (6, 7), pair2, b_outer, 2, row()); r[k] = 0.0; k += 1

    assert k == 13
    return M, r


def _eliminate_coefficients(M: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares coefficients with column equilibration.

    Column scaling leaves the column span (hence the optimal residual)
    unchanged but keeps the factorization well conditioned despite the very
    different magnitudes of exponential and affine columns.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        scale = np.linalg.norm(M, axis=0)
    scale[~np.isfinite(scale) | (scale == 0.0)] = 1.0
    c, *_ = np.linalg.lstsq(M / scale, r, rcond=None)
    c = c / scale
    return c, M @ c - r


def _cone_violation(case_tag: str, params: ValidatedParams,
                    d1: float, b_inner: float, b_outer: float) -> float:
    th1, th2 = params.theta1, params.theta2
    if case_tag == "C":
        gaps = (d1 - th2, b_inner - d1, b_outer - b_inner)
    else:
        gaps = (d1 - th1, th2 - d1, b_inner - th2, b_outer - b_inner)
    return max(0.0, *(-g for g in gaps))


def _boundaries_from_ordering(ordering: Ordering, d1: float, b1: float, b2: float):
    if ordering.own_barrier_last:
        return d1, b2, b1  # inner, outer
    return d1, b1, b2


def residuals(case_tag: str, ordering: Ordering, unknowns: np.ndarray,
              params: ValidatedParams) -> np.ndarray:
    """Residual vector of the full 13-equation system at the given unknowns.

    ``unknowns`` is [d1, b1, b2, C1..C8, K1, K2] in the solved case's own
    naming: C1, C2 span the segment adjacent to the liquidation level,
    C3..C6 are the quartic coefficients of the regime that owns them in that
    case's piecewise form (regime 2 when case C has b2 < b1, regime 1
    otherwise), and C7, C8 span the outermost exponential segment.  Out-of-
    cone boundaries return penalty-augmented residuals instead of raising,
    so line searches remain total.
    """
    unknowns = np.asarray(unknowns, dtype=float)
    if unknowns.shape != (13,):
        raise ValueError("expected a 13-vector [d1, b1, b2, C1..C8, K1, K2]")
    d1, b1, b2 = unknowns[:3]
    c_named = unknowns[3:]
    sys = _system(params)
    c = c_named.copy()
    if case_tag == "C" and ordering.own_barrier_last:
        # public C3..C6 are regime-2 quartic coefficients; internal columns
        # carry the regime-1 ones
        c[2:6] = c_named[2:6] / np.asarray(sys.ratios)
    d1, b_inner, b_outer = _boundaries_from_ordering(ordering, d1, b1, b2)
    violation = _cone_violation(case_tag, params, d1, b_inner, b_outer)
    if violation > 0.0:
        # evaluate at the clipped geometry and inflate
        eps = 1e-6
        if case_tag == "C":
            d1 = max(d1, params.theta2 + eps)
        else:
            d1 = min(max(d1, params.theta1 + eps), params.theta2 - eps)
        b_inner = max(b_inner, max(params.theta2, d1) + eps)
        b_outer = max(b_outer, b_inner + eps)
    M, r = _linear_system(sys, case_tag, ordering.own_barrier_last, d1, b_inner, b_outer)
    out = M @ c - r
    if violation > 0.0:
        out = out + _CONE_PENALTY * violation * np.sign(out + 1e-300)
    return out


@dataclass(frozen=True)
class CaseCDSolution:
    """A converged liquidation-barrier candidate."""

    case_tag: str
    ordering: Ordering
    d1: float
    b1: float
    b2: float
    C: tuple[float, ...]          # C1..C8 in the case's own naming
    hatC: tuple[float, ...]       # coupled quartic coefficients of the other regime
    K1: float
    K2: float
    value: PiecewiseValue
    policy: LiquidationBarrier
    residual_max: float
    scale: float

    @property
    def unknowns(self) -> np.ndarray:
        return np.array([self.d1, self.b1, self.b2, *self.C, self.K1, self.K2])

    def to_dict(self) -> dict:
        return {
            "case": self.case_tag,
            "ordering": self.ordering.value,
            "d1": self.d1,
            "b1": self.b1,
            "b2": self.b2,
            "C": list(self.C),
            "hatC": list(self.hatC),
            "K1": self.K1,
            "K2": self.K2,
            "residual_max": self.residual_max,
        }


def _assemble(sys: _System, case_tag: str, ordering: Ordering,
              d1: float, b_inner: float, b_outer: float,
              c: np.ndarray, resid: np.ndarray) -> CaseCDSolution:
    p = sys.params
    th1, th2 = p.theta1, p.theta2
    aq = sys.quartic
    q1 = tuple(c[2:6])                                   # regime-1 quartic
    q2 = tuple(rr * qq for rr, qq in zip(sys.ratios, q1))  # regime-2 quartic
    pair1, pair2 = (sys.a1, sys.a2), (sys.a7, sys.a8)
    K1, K2 = float(c[8]), float(c[9])
    own_last = ordering.own_barrier_last
    b1 = b_outer if own_last else b_inner
    b2 = b_inner if own_last else b_outer

    liq = Segment(th1, d1, slope=1.0, intercept=-th1)
    if case_tag == "C":
        low2 = Segment(th2, d1, exponents=pair2, coefficients=(c[0], c[1]),
                       intercept=sys.i2, slope=sys.s2)
        if own_last:
            seg1 = (
                liq,
                Segment(d1, b2, exponents=aq, coefficients=q1),
                Segment(b2, b1, exponents=pair1, coefficients=(c[6], c[7]),
                        intercept=sys.i1k + sys.s1 * K1, slope=sys.s1),
                Segment(b1, math.inf, slope=1.0, intercept=K2),
            )
            jun1 = (Junction(th1, 0), Junction(d1, 1), Junction(b2, 1), Junction(b1, 2))
            seg2 = (
                low2,
                Segment(d1, b2, exponents=aq, coefficients=q2),
                Segment(b2, math.inf, slope=1.0, intercept=K1),
            )
            jun2 = (Junction(th2, 0), Junction(d1, 1), Junction(b2, 2))
        else:
            seg1 = (
                liq,
                Segment(d1, b1, exponents=aq, coefficients=q1),
                Segment(b1, math.inf, slope=1.0, intercept=K1),
            )
            jun1 = (Junction(th1, 0), Junction(d1, 1), Junction(b1, 2))
            seg2 = (
                low2,
                Segment(d1, b1, exponents=aq, coefficients=q2),
                Segment(b1, b2, exponents=pair2, coefficients=(c[6], c[7]),
                        intercept=sys.i2k + sys.s2 * K1, slope=sys.s2),
                Segment(b2, math.inf, slope=1.0, intercept=K2),
            )
            jun2 = (Junction(th2, 0), Junction(d1, 1), Junction(b1, 1), Junction(b2, 2))
        C_named = (c[0], c[1], *(q2 if own_last else q1), c[6], c[7])
        hat = q1 if own_last else q2
    else:
        mid1 = Segment(d1, th2, exponents=pair1, coefficients=(c[0], c[1]))
        if own_last:
            seg1 = (
                liq,
                mid1,
                Segment(th2, b2, exponents=aq, coefficients=q1),
                Segment(b2, b1, exponents=pair1, coefficients=(c[6], c[7]),
                        intercept=sys.i1k + sys.s1 * K1, slope=sys.s1),
                Segment(b1, math.inf, slope=1.0, intercept=K2),
            )
            jun1 = (Junction(th1, 0), Junction(d1, 1), Junction(th2, 1),
                    Junction(b2, 1), Junction(b1, 2))
            seg2 = (
                Segment(th2, b2, exponents=aq, coefficients=q2),
                Segment(b2, math.inf, slope=1.0, intercept=K1),
            )
            jun2 = (Junction(th2, 0), Junction(b2, 2))
        else:
            seg1 = (
                liq,
                mid1,
                Segment(th2, b1, exponents=aq, coefficients=q1),
                Segment(b1, math.inf, slope=1.0, intercept=K1),
            )
            jun1 = (Junction(th1, 0), Junction(d1, 1), Junction(th2, 1), Junction(b1, 2))
            seg2 = (
                Segment(th2, b1, exponents=aq, coefficients=q2),
                Segment(b1, b2, exponents=pair2, coefficients=(c[6], c[7]),
                        intercept=sys.i2k + sys.s2 * K1, slope=sys.s2),
                Segment(b2, math.inf, slope=1.0, intercept=K2),
            )
            jun2 = (Junction(th2, 0), Junction(b1, 1), Junction(b2, 2))
        C_named = (c[0], c[1], *q1, c[6], c[7])
        hat = q2

    value = PiecewiseValue(
        RegimeValue(theta=th1, segments=seg1, junctions=jun1),
        RegimeValue(theta=th2, segments=seg2, junctions=jun2),
    )
    scale = max(1.0, abs(float(value.eval(b1, 1))))
    return CaseCDSolution(
        case_tag=case_tag, ordering=ordering, d1=float(d1), b1=float(b1), b2=float(b2),
        C=tuple(float(x) for x in C_named), hatC=tuple(float(x) for x in hat),
        K1=K1, K2=K2, value=value,
        policy=LiquidationBarrier(d1=float(d1), b1=float(b1), b2=float(b2), ordering=ordering),
        residual_max=float(np.max(np.abs(resid))), scale=scale,
    )


def _gaps_to_boundaries(case_tag: str, params: ValidatedParams, u: np.ndarray):
    th1, th2 = params.theta1, params.theta2
    if case_tag == "C":
        u = np.clip(u, _U_MIN, 3.0)
        d1 = th2 + math.exp(u[0])
    else:
        cap = math.log(max(th2 - th1, 1e-12))
        u = np.array([min(max(u[0], _U_MIN), cap - 1e-9),
                      min(max(u[1], _U_MIN), 3.0),
                      min(max(u[2], _U_MIN), 3.0)])
        d1 = th2 - math.exp(u[0])
    b_inner = (d1 if case_tag == "C" else th2) + math.exp(u[1])
    b_outer = b_inner + math.exp(u[2])
    return d1, b_inner, b_outer


def _boundaries_to_gaps(case_tag: str, params: ValidatedParams,
                        d1: float, b_inner: float, b_outer: float) -> np.ndarray:
    th1, th2 = params.theta1, params.theta2
    if case_tag == "C":
        g0 = d1 - th2
    else:
        g0 = th2 - d1
    g1 = b_inner - (d1 if case_tag == "C" else th2)
    g2 = b_outer - b_inner
    return np.log(np.maximum([g0, g1, g2], 1e-14))


def _seed_list(case_tag: str, ordering: Ordering, params: ValidatedParams,
               seed_hint) -> list[tuple[float, float, float]]:
    """Boundary-gap seeds as (g0, g1, g2) log-gap triples.

    The single-barrier solution anchors the scale W = b2 - theta2; the
    liquidation gap g0 is fanned geometrically down to 1e-5 W because the
    solved level approaches its lower anchor arbitrarily closely near the
    case transitions (continuation in mu2 drives d1 -> theta2+).
    """
    th1, th2 = params.theta1, params.theta2
    try:
        b2_seed = solve_case_b(params).b2
    except ModelError:
        b2_seed = th2 + 0.5 * (th2 - th1 + 1.0)
    W = max(b2_seed - th2, 0.1 * (th2 - th1 + 1.0))
    T = max(th2 - th1, 1e-6)

    gaps: list[tuple[float, float, float]] = []
    if case_tag == "C":
        if ordering.own_barrier_last:
            for f in (0.5, 0.15, 0.04, 0.01, 0.002, 2e-4, 2e-5):
                g0 = f * W
                gaps.append((g0, max(W - g0, 0.2 * W), 0.15 * W))
            gaps += [(0.5 * W, 0.5 * W, 0.5 * W), (0.1 * W, 1.5 * W, 0.05 * W)]
        else:
            for f in (0.5, 0.15, 0.04, 0.01):
                g0 = f * W
                for g2 in (0.1 * W, 0.02 * W):
                    gaps.append((g0, max(W - g0 - g2, 0.2 * W), g2))
            gaps.append((0.7 * W, 0.2 * W, 0.05 * W))
    else:
        if ordering.own_barrier_last:
            for f in (0.5, 0.15, 0.04, 0.01, 0.002):
                gaps.append((f * T, W, 0.15 * W))
            gaps += [(0.25 * T, 0.5 * W, 0.5 * W), (0.05 * T, 1.5 * W, 0.05 * W)]
        else:
            for f in (0.5, 0.15, 0.04, 0.01):
                for g2 in (0.1 * W, 0.02 * W):
                    gaps.append((f * T, max(W - g2, 0.2 * W), g2))

    seeds = []
    if seed_hint is not None:
        d1, b1, b2 = seed_hint
        seeds.append(_boundaries_from_ordering(ordering, d1, b1, b2))
    for g in gaps:
        u = np.log(np.maximum(g, 1e-13))
        seeds.append(_gaps_to_boundaries(case_tag, params, u))
    return seeds


def solve_case(case_tag: str, ordering: Ordering, params: ValidatedParams,
               seed_hint=None) -> CaseCDSolution:
    """Solve the smooth-fit system for one case and barrier ordering.

    Multistart damped Gauss-Newton (Levenberg-Marquardt) over the three
    gap-parametrized boundaries with exact linear elimination of the ten
    coefficients.  Returns the first start whose full residual vector falls
    below 1e-9 relative to the value scale at the outer barrier; raises
    :class:`NoConvergence` or :class:`OrderingViolated` otherwise.
    """
    if case_tag not in ("C", "D"):
        raise ValueError(f"case_tag must be 'C' or 'D', got {case_tag!r}")
    if ordering.case_tag != case_tag:
        raise ValueError(f"ordering {ordering} does not belong to case {case_tag}")
    if params.mu2 < 0.0:
        raise CaseNotApplicable("liquidation-barrier cases require mu2 >= 0")
    if case_tag == "D" and params.theta2 - params.theta1 <= 1e-12:
        raise CaseNotApplicable("case D needs strictly separated bankruptcy levels")
    sys = _system(params)
    alpha_max = max(abs(sys.a1), abs(sys.a2), abs(sys.a7), abs(sys.a8),
                    *(abs(a) for a in sys.quartic))

    def resid_of_u(u: np.ndarray) -> np.ndarray:
        d1, bi, bo = _gaps_to_boundaries(case_tag, params, u)
        if alpha_max * max(abs(d1), abs(bo)) > 600.0:
            # exploratory step left the representable range; steer back
            return np.full(13, 1e6)
        M, r = _linear_system(sys, case_tag, ordering.own_barrier_last, d1, bi, bo)
        _, res = _eliminate_coefficients(M, r)
        return res

    def min_gap(d1: float, bi: float, bo: float) -> float:
        if case_tag == "C":
            return min(d1 - params.theta2, bi - d1, bo - bi)
        return min(d1 - params.theta1, params.theta2 - d1, bi - params.theta2, bo - bi)

    best: tuple[float, CaseCDSolution] | None = None
    collapsed = False
    for seed in _seed_list(case_tag, ordering, params, seed_hint):
        u0 = _boundaries_to_gaps(case_tag, params, *seed)
        try:
            fit = least_squares(resid_of_u, u0, method="lm",
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
        except Exception:
            continue
        d1, bi, bo = _gaps_to_boundaries(case_tag, params, fit.x)
        M, r = _linear_system(sys, case_tag, ordering.own_barrier_last, d1, bi, bo)
        c, res = _eliminate_coefficients(M, r)
        sol = _assemble(sys, case_tag, ordering, d1, bi, bo, c, res)
        if sol.residual_max <= _RESID_TOL * sol.scale:
            if min_gap(d1, bi, bo) <= _MIN_GAP:
                collapsed = True
                continue
            return sol
        if sol.residual_max <= 1e-6 * sol.scale:
            # near miss: let the full 13-dimensional Newton finish the job
            refined = refine_full_newton(case_tag, ordering, params, sol.unknowns)
            res13 = residuals(case_tag, ordering, refined, params)
            if np.max(np.abs(res13)) <= _RESID_TOL * sol.scale:
                rd1, rb1, rb2 = refined[:3]
                rd1_, bi_, bo_ = _boundaries_from_ordering(ordering, rd1, rb1, rb2)
                M, r = _linear_system(sys, case_tag, ordering.own_barrier_last, rd1_, bi_, bo_)
                c, res = _eliminate_coefficients(M, r)
                sol = _assemble(sys, case_tag, ordering, rd1_, bi_, bo_, c, res)
                if sol.residual_max <= _RESID_TOL * sol.scale:
                    if min_gap(rd1_, bi_, bo_) <= _MIN_GAP:
                        collapsed = True
                        continue
                    return sol
        if best is None or sol.residual_max < best[0]:
            best = (sol.residual_max, sol)
    if collapsed:
        raise OrderingViolated(
            f"case {case_tag} ({ordering.value}): converged only with collapsed "
            "boundaries; no interior solution in this ordering"
        )
    detail = f"best residual {best[0]:.3e}" if best else "no start produced a candidate"
    raise NoConvergence(f"case {case_tag} ({ordering.value}): {detail}")


def candidate_at_boundaries(case_tag: str, ordering: Ordering, params: ValidatedParams,
                            d1: float, b1: float, b2: float) -> CaseCDSolution:
    """Best-effort candidate at given boundaries, no convergence required.

    Coefficients are the least-squares solution of the pasting system, so a
    non-solution boundary triple leaves its defect spread over the smooth-fit
    residuals where the verifier will name it.
    """
    sys = _system(params)
    d1_, bi, bo = _boundaries_from_ordering(ordering, d1, b1, b2)
    if _cone_violation(case_tag, params, d1_, bi, bo) > 0.0:
        raise OrderingViolated(
            f"boundaries (d1={d1}, b1={b1}, b2={b2}) violate the {ordering.value} cone"
        )
    M, r = _linear_system(sys, case_tag, ordering.own_barrier_last, d1_, bi, bo)
    c, res = _eliminate_coefficients(M, r)
    return _assemble(sys, case_tag, ordering, d1_, bi, bo, c, res)


def refine_full_newton(case_tag: str, ordering: Ordering, params: ValidatedParams,
                       unknowns: np.ndarray, max_iter: int = 60) -> np.ndarray:
    """Damped Newton on all 13 raw unknowns; independent of the elimination.

    Jacobian by central differences (step 1e-6 times the coordinate scale),
    Armijo backtracking on the residual 2-norm.  Used to cross-check that
    the reduced solver and the full system agree on the same fixed point.
    """
    x = np.asarray(unknowns, dtype=float).copy()

    def f(v: np.ndarray) -> np.ndarray:
        return residuals(case_tag, ordering, v, params)

    for _ in range(max_iter):
        r0 = f(x)
        n0 = np.linalg.norm(r0)
        if n0 < 1e-12:
            break
        J = np.empty((13, 13))
        for j in range(13):
            h = 1e-6 * max(1.0, abs(x[j]))
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            J[:, j] = (f(xp) - f(xm)) / (2.0 * h)
        try:
            step = np.linalg.solve(J, -r0)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(J, -r0, rcond=None)
        t = 1.0
        for _ in range(30):
            if np.linalg.norm(f(x + t * step)) < (1.0 - 1e-4 * t) * n0:
                break
            t *= 0.5
        x = x + t * step
    return x


def _c6_magnitude(sol: CaseCDSolution) -> float:
    from .conditions import quartic_leading_term

    return quartic_leading_term(sol.value)[1]


def check_case_c_conditions(params: ValidatedParams, sol: CaseCDSolution) -> ConditionReport:
    """Sufficient-optimality conditions for a liquidation level above theta2: hypothesis
    (slope at theta2 at least 1, C6 nonzero) plus one of the three
    alternative sign conditions on GH."""
    if sol.case_tag != "C":
        raise ValueError("solution is not a case-C candidate")
    return check_c_value(sol.value, params, sol.d1, sol.C[5], _c6_magnitude(sol))


def check_case_d_conditions(params: ValidatedParams, sol: CaseCDSolution) -> ConditionReport:
    """Sufficient-optimality conditions for a liquidation level below theta2: nonnegative
    right slope of w(., 2) at theta2, strict boundary ordering, C6 nonzero."""
    if sol.case_tag != "D":
        raise ValueError("solution is not a case-D candidate")
    return check_d_value(
        sol.value, params, sol.d1, sol.b1, sol.b2, sol.C[5], _c6_magnitude(sol)
    )

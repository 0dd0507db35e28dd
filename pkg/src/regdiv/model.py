"""Domain types shared by every solver stage.

The model is a two-regime Markov-modulated surplus process: in regime i the
surplus drifts at ``mu_i`` with volatility ``sigma_i``, the chain leaves the
regime at rate ``lambda_i``, and the firm is bankrupt once the surplus falls
to the regime's own level ``theta_i``.  Dividends are discounted at ``rho``.

Everything here is an immutable value object; all mutation happens in solver
scratch space, never in these types.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "ModelError",
    "ValidationError",
    "NonPositiveVolatility",
    "NonPositiveRate",
    "ThetaOrderViolation",
    "PositiveMu1",
    "NonFiniteParameter",
    "Regime",
    "ModelParams",
    "ValidatedParams",
    "validate",
    "params_from_json",
    "params_to_json",
    "Ordering",
    "LiquidateBoth",
    "BarrierRegime2",
    "LiquidationBarrier",
    "Policy",
    "Segment",
    "PiecewiseValue",
]


class ModelError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ModelError, ValueError):
    """A parameter set violates one of the model's standing assumptions."""


class NonPositiveVolatility(ValidationError):
    pass


class NonPositiveRate(ValidationError):
    pass


class ThetaOrderViolation(ValidationError):
    pass


class PositiveMu1(ValidationError):
    pass


class NonFiniteParameter(ValidationError):
    pass


class Regime(enum.IntEnum):
    """The two-state economic regime."""

    ONE = 1
    TWO = 2

    @property
    def other(self) -> "Regime":
        return Regime.TWO if self is Regime.ONE else Regime.ONE


_FIELDS = ("mu1", "mu2", "sigma1", "sigma2", "lambda1", "lambda2", "theta1", "theta2", "rho")


@dataclass(frozen=True)
class ModelParams:
    """Scalar model inputs.

    Units: drifts in surplus/time, volatilities in surplus/sqrt(time),
    transition rates and the discount rate in 1/time, bankruptcy levels in
    surplus units.
    """

    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    lambda1: float
    lambda2: float
    theta1: float
    theta2: float
    rho: float

    def mu(self, regime: int) -> float:
        return self.mu1 if regime == 1 else self.mu2

    def sigma(self, regime: int) -> float:
        return self.sigma1 if regime == 1 else self.sigma2

    def lam(self, regime: int) -> float:
        return self.lambda1 if regime == 1 else self.lambda2

    def theta(self, regime: int) -> float:
        return self.theta1 if regime == 1 else self.theta2

    def replace(self, **kwargs: float) -> "ModelParams":
        values = {name: getattr(self, name) for name in _FIELDS}
        values.update(kwargs)
        return ModelParams(**values)

    def as_dict(self) -> dict:
        return {name: float(getattr(self, name)) for name in _FIELDS}


@dataclass(frozen=True)
class ValidatedParams(ModelParams):
    """A :class:`ModelParams` that passed :func:`validate`.

    ``equal_thetas`` records that the set was admitted under the relaxation
    that allows ``theta1 == theta2`` (single shared bankruptcy level).
    """

    equal_thetas: bool = False


def validate(params: ModelParams, allow_equal_thetas: bool = False) -> ValidatedParams:
    """Check the standing assumptions and return a validated wrapper.

    Rejections name the violated constraint:

    * volatilities must be strictly positive,
    * transition and discount rates must be strictly positive,
    * ``theta1 < theta2`` (strict; ``allow_equal_thetas=True`` relaxes this to
      ``theta1 <= theta2``, the shared-level comparison case),
    * ``mu1 <= 0`` (the regime-1 drift is never profitable in this model),
    * every field must be a finite float.
    """
    for name in _FIELDS:
        value = getattr(params, name)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise NonFiniteParameter(f"{name} must be a real scalar, got {value!r}")
        if not math.isfinite(value):
            raise NonFiniteParameter(f"{name} must be finite, got {value!r}")
    if params.sigma1 <= 0.0:
        raise NonPositiveVolatility(f"sigma1 must be > 0, got {params.sigma1}")
    if params.sigma2 <= 0.0:
        raise NonPositiveVolatility(f"sigma2 must be > 0, got {params.sigma2}")
    if params.lambda1 <= 0.0:
        raise NonPositiveRate(f"lambda1 must be > 0, got {params.lambda1}")
    if params.lambda2 <= 0.0:
        raise NonPositiveRate(f"lambda2 must be > 0, got {params.lambda2}")
    if params.rho <= 0.0:
        raise NonPositiveRate(f"rho must be > 0, got {params.rho}")
    if params.mu1 > 0.0:
        raise PositiveMu1(f"mu1 must be <= 0, got {params.mu1}")
    if allow_equal_thetas:
        if params.theta1 > params.theta2:
            raise ThetaOrderViolation(
                f"theta1 <= theta2 required, got theta1={params.theta1}, theta2={params.theta2}"
            )
    elif params.theta1 >= params.theta2:
        raise ThetaOrderViolation(
            f"theta1 < theta2 required (strict), got theta1={params.theta1}, "
            f"theta2={params.theta2}"
        )
    return ValidatedParams(
        **params.as_dict(), equal_thetas=bool(params.theta1 == params.theta2)
    )


def params_from_json(text: str, allow_equal_thetas: bool = False) -> ValidatedParams:
    """Parse the flat JSON parameter object and validate it."""
    raw = json.loads(text)
    if not isinstance(raw, dict):
        raise ValidationError("parameter JSON must be an object")
    missing = [name for name in _FIELDS if name not in raw]
    if missing:
        raise ValidationError(f"missing parameter keys: {', '.join(missing)}")
    unknown = [key for key in raw if key not in _FIELDS]
    if unknown:
        raise ValidationError(f"unknown parameter keys: {', '.join(sorted(unknown))}")
    try:
        values = {name: float(raw[name]) for name in _FIELDS}
    except (TypeError, ValueError) as exc:
        raise NonFiniteParameter(f"non-numeric parameter value: {exc}") from None
    return validate(ModelParams(**values), allow_equal_thetas=allow_equal_thetas)


def params_to_json(params: ModelParams, indent: int | None = None) -> str:
    return json.dumps(params.as_dict(), indent=indent)


class Ordering(enum.Enum):
    """Which liquidation-barrier layout a solved policy uses.

    ``C_*`` layouts have the liquidation level above ``theta2``; ``D_*``
    layouts have it strictly between the two bankruptcy levels.  The suffix
    records which reflecting barrier is the outermost one.
    """

    C_B2_LT_B1 = "C_b2_lt_b1"
    C_B1_LT_B2 = "C_b1_lt_b2"
    D_B2_LT_B1 = "D_b2_lt_b1"
    D_B1_LT_B2 = "D_b1_lt_b2"

    @property
    def case_tag(self) -> str:
        return self.value[0]

    @property
    def own_barrier_last(self) -> bool:
        """True when b2 < b1 (regime-1 barrier is the outermost)."""
        return self.value.endswith("b2_lt_b1")


@dataclass(frozen=True)
class LiquidateBoth:
    """Pay out the whole surplus immediately in both regimes."""

    def barriers(self, params: ModelParams) -> tuple[float | None, float, float]:
        return None, params.theta1, params.theta2


@dataclass(frozen=True)
class BarrierRegime2:
    """Immediate liquidation in regime 1, reflection at ``b2`` in regime 2."""

    b2: float

    def barriers(self, params: ModelParams) -> tuple[float | None, float, float]:
        return None, params.theta1, self.b2


@dataclass(frozen=True)
class LiquidationBarrier:
    """Liquidate below ``d1`` in regime 1, reflect at ``b1``/``b2`` otherwise."""

    d1: float
    b1: float
    b2: float
    ordering: Ordering

    def barriers(self, params: ModelParams) -> tuple[float | None, float, float]:
        return self.d1, self.b1, self.b2


Policy = Union[LiquidateBoth, BarrierRegime2, LiquidationBarrier]


def policy_to_dict(policy: Policy) -> dict:
    if isinstance(policy, LiquidateBoth):
        return {"kind": "liquidate_both"}
    if isinstance(policy, BarrierRegime2):
        return {"kind": "barrier_regime2", "b2": policy.b2}
    return {
        "kind": "liquidation_barrier",
        "d1": policy.d1,
        "b1": policy.b1,
        "b2": policy.b2,
        "ordering": policy.ordering.value,
    }


def policy_from_dict(raw: dict) -> Policy:
    kind = raw.get("kind")
    if kind == "liquidate_both":
        return LiquidateBoth()
    if kind == "barrier_regime2":
        return BarrierRegime2(b2=float(raw["b2"]))
    if kind == "liquidation_barrier":
        return LiquidationBarrier(
            d1=float(raw["d1"]),
            b1=float(raw["b1"]),
            b2=float(raw["b2"]),
            ordering=Ordering(raw["ordering"]),
        )
    raise ValidationError(f"unknown policy kind: {kind!r}")


@dataclass(frozen=True)
class Segment:
    """One piece of a value function: sum of exponentials plus an affine part.

    Represents ``sum_k c_k exp(a_k x) + intercept + slope * x`` on
    ``[x_lo, x_hi)``.  Derivatives are analytic.
    """

    x_lo: float
    x_hi: float
    exponents: tuple[float, ...] = ()
    coefficients: tuple[float, ...] = ()
    intercept: float = 0.0
    slope: float = 0.0

    def __post_init__(self) -> None:
        if len(self.exponents) != len(self.coefficients):
            raise ValueError("exponents and coefficients must pair up")

    def eval(self, x: np.ndarray, order: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if order == 0:
            out = self.intercept + self.slope * x
        elif order == 1:
            out = np.full_like(x, self.slope)
        else:
            out = np.zeros_like(x)
        for a, c in zip(self.exponents, self.coefficients):
            out = out + c * a**order * np.exp(a * x)
        return out


# Continuity class required at a junction: 0 -> value only, 1 -> value and
# slope, 2 -> value, slope and curvature.
@dataclass(frozen=True)
class Junction:
    x: float
    smoothness: int


@dataclass(frozen=True)
class RegimeValue:
    """Piecewise representation of w(., i): zero at and below theta, then
    segments partitioning (theta, infinity)."""

    theta: float
    segments: tuple[Segment, ...]
    junctions: tuple[Junction, ...] = ()

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("at least one segment required")
        lo = self.theta
        for seg in self.segments:
            if not math.isclose(seg.x_lo, lo, rel_tol=0.0, abs_tol=1e-12):
                raise ValueError(f"segments must partition ({self.theta}, inf); gap at {lo}")
            lo = seg.x_hi
        if not math.isinf(lo):
            raise ValueError("last segment must extend to +inf")

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([seg.x_lo for seg in self.segments[1:]])

    def eval(self, x, order: int = 0):
        """Evaluate the order-th derivative; 0 at and below theta.

        At interior breakpoints the segment owning the point (its left
        endpoint) wins, i.e. evaluation is right-continuous there.
        """
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        live = x > self.theta
        if np.any(live):
            idx = np.searchsorted(self.breakpoints, x[live], side="right")
            vals = np.empty(idx.shape, dtype=float)
            for k, seg in enumerate(self.segments):
                mask = idx == k
                if np.any(mask):
                    vals[mask] = seg.eval(x[live][mask], order)
            out[live] = vals
        return float(out[0]) if scalar else out

    def segment_at(self, x: float) -> Segment:
        idx = int(np.searchsorted(self.breakpoints, x, side="right"))
        return self.segments[idx]

    def one_sided(self, x: float, order: int, side: str) -> float:
        """Analytic one-sided limit at x from 'left' or 'right'."""
        if side == "left":
            if x <= self.theta:
                return 0.0
            idx = int(np.searchsorted(self.breakpoints, x, side="left"))
        else:
            idx = int(np.searchsorted(self.breakpoints, x, side="right"))
        return float(self.segments[idx].eval(np.asarray(x), order))


@dataclass(frozen=True)
class PiecewiseValue:
    """The candidate value function for both regimes."""

    regime1: RegimeValue
    regime2: RegimeValue

    def regime(self, i: int) -> RegimeValue:
        return self.regime1 if i == 1 else self.regime2

    def eval(self, x, regime: int, order: int = 0):
        return self.regime(regime).eval(x, order)

    def __call__(self, x, regime: int):
        return self.eval(x, regime, 0)

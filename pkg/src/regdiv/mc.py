"""Monte Carlo cross-validation of the analytic value functions.

The controlled surplus is simulated forward: regime holding times are drawn
exactly from their exponential laws, the Brownian part advances by Euler
steps re-anchored at every switch (exact in distribution, since coefficients
are constant within a regime), barrier reflection is end-of-step projection
with the overflow booked as a dividend at the step-end discount, and
absorption at the bankruptcy level combines the end-of-step check with a
Brownian-bridge crossing kill, which removes the dominant discrete-
monitoring bias (conditional on the step endpoints the crossing probability
exp(-2 d_a d_b / (sigma^2 h)) is drift-free and exact).  Lump actions
(initial payout, liquidation, overflow at a regime change) follow the
policy exactly.

Two implementations share one algorithm: :func:`simulate_path` is the plain
Python reference, and a numba kernel runs large batches in parallel with
per-path counter-based streams so results are independent of thread count.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional

import numba as nb
import numpy as np

from ._rng import PathRNG
from .model import ModelParams, Policy
from .policy import Selection

__all__ = [
    "SimConfig",
    "SimEstimate",
    "ProbeResult",
    "default_horizon",
    "simulate_path",
    "estimate_value",
    "suboptimality_probe",
    "set_threads",
]

_TWO_PI = 2.0 * math.pi
_TAIL_TARGET = 1e-4


def set_threads(n: Optional[int] = None) -> None:
    """Cap the kernel's worker count (REGDIV_THREADS is the env fallback)."""
    if n is None:
        env = os.environ.get("REGDIV_THREADS")
        n = int(env) if env else 0
    if n and n > 0:
        nb.set_num_threads(min(n, nb.config.NUMBA_NUM_THREADS))


@dataclass(frozen=True)
class SimConfig:
    """Euler-scheme and sampling controls."""

    dt: float = 1e-4
    horizon: Optional[float] = None   # None: pick so the tail bound < 1e-4
    n_paths: int = 10_000
    seed: int = 0
    antithetic: bool = True

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.horizon is not None and self.horizon < 0.0:
            raise ValueError("horizon must be nonnegative")
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")


@dataclass(frozen=True)
class SimEstimate:
    """Sample mean with its standard error and the truncation accounting."""

    mean: float
    stderr: float
    n_paths: int
    discount_tail_bound: float
    horizon: float

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def _policy_numbers(policy_or_selection, params: ModelParams):
    policy = policy_or_selection.policy if isinstance(policy_or_selection, Selection) \
        else policy_or_selection
    d1, b1, b2 = policy.barriers(params)
    return (math.nan if d1 is None else float(d1)), float(b1), float(b2)


def default_horizon(params: ModelParams, policy: Policy, x0: float,
                    target: float = _TAIL_TARGET) -> float:
    """Horizon making e^{-rho T} (X_cap + mu_plus/rho) fall below target."""
    _, b1, b2 = _policy_numbers(policy, params)
    mu_plus = max(params.mu1, params.mu2, 0.0)
    cap = max(b1, b2, x0) + mu_plus / params.rho
    if cap <= 0.0:
        return 0.0
    return max(0.0, math.log(cap / target) / params.rho)


def _tail_cap(params: ModelParams, x: float) -> float:
    return x + max(params.mu1, params.mu2, 0.0) / params.rho


def simulate_path(policy, params: ModelParams, x0: float, regime0: int,
                  config: SimConfig, path_rng: PathRNG,
                  normal_sign: float = 1.0, trace: Optional[list] = None) -> float:
    """Discounted dividends along one controlled path (Python reference).

    Bit-identical to the compiled batch kernel given the same stream, and
    therefore the ground truth its tests compare against.  ``trace``, when
    given, collects (t, regime, surplus, cumulative_dividend) rows including
    the initial state and every lump event.
    """
    d1, b1, b2 = _policy_numbers(policy, params)
    horizon = config.horizon
    if horizon is None:
        horizon = default_horizon(params, policy, x0)
    dt = config.dt
    rho = params.rho
    df_dt = math.exp(-rho * dt)
    sqdt = math.sqrt(dt)

    t = 0.0
    disc = 1.0
    regime = int(regime0)
    x = float(x0)
    total = 0.0
    cum_div = 0.0

    def record() -> None:
        if trace is not None:
            trace.append((t, regime, x, cum_div))

    record()

    def entry_action() -> bool:
        """Apply the lump rule at the current (x, regime); True if dead."""
        nonlocal x, total, cum_div
        theta = params.theta(regime)
        if x <= theta:
            record()
            return True
        if regime == 1 and not math.isnan(d1) and x <= d1:
            total += disc * (x - params.theta1)
            cum_div += x - params.theta1
            x = params.theta1
            record()
            return True
        barrier = b1 if regime == 1 else b2
        if x > barrier:
            total += disc * (x - barrier)
            cum_div += x - barrier
            x = barrier
            record()
            if x <= theta:
                return True
        return False

    if entry_action():
        return total
    t_switch = path_rng.exponential(params.lam(regime))

    while True:
        rem_h = horizon - t
        if rem_h <= 0.0:
            break
        h = dt
        full_step = True
        at_switch = False
        rem_sw = t_switch - t
        if rem_sw <= h:
            h = rem_sw
            full_step = False
            at_switch = True
        if rem_h <= h:
            h = rem_h
            full_step = False
            at_switch = False
        mu = params.mu(regime)
        sig = params.sigma(regime)
        theta = params.theta(regime)
        z = normal_sign * path_rng.normal()
        x_prev = x
        if full_step:
            x += mu * dt + sig * sqdt * z
            t += dt
            disc *= df_dt
        else:
            x += mu * h + sig * math.sqrt(h) * z
            t += h
            disc = math.exp(-rho * t)
        if x <= theta:
            record()
            return total
        if h > 0.0 and (regime == 2 or math.isnan(d1)):
            # Brownian-bridge absorption: kill when the continuous path
            # crossed theta within the step despite both endpoints surviving.
            # In regime 1 a liquidation zone shields theta, so the bridge
            # only applies where theta itself absorbs.
            expo = -2.0 * (x_prev - theta) * (x - theta) / (sig * sig * h)
            if expo > -40.0 and path_rng.uniform() < math.exp(expo):
                record()
                return total
        if regime == 1 and not math.isnan(d1) and x <= d1:
            # the liquidation zone is an intervention region: crossing it
            # between switches triggers the full payout immediately
            total += disc * (x - params.theta1)
            cum_div += x - params.theta1
            x = params.theta1
            record()
            return total
        barrier = b1 if regime == 1 else b2
        if x > barrier:
            total += disc * (x - barrier)
            cum_div += x - barrier
            x = barrier
        if at_switch:
            regime = 2 if regime == 1 else 1
            record()
            if entry_action():
                return total
            t_switch = t + path_rng.exponential(params.lam(regime))
    record()
    return total


@nb.njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@nb.njit(inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (np.uint64(64) - k))


@nb.njit(inline="always")
def _path_state(seed, path_index):
    golden = np.uint64(0x9E3779B97F4A7C15)
    state = _mix64(seed ^ _mix64(path_index + golden))
    state = state + golden
    s0 = _mix64(state)
    state = state + golden
    s1 = _mix64(state)
    state = state + golden
    s2 = _mix64(state)
    state = state + golden
    s3 = _mix64(state)
    if s0 == 0 and s1 == 0 and s2 == 0 and s3 == 0:
        s0 = np.uint64(1)
    return s0, s1, s2, s3


@nb.njit(inline="always")
def _uniform(s0, s1, s2, s3):
    result = _rotl(s0 + s3, np.uint64(23)) + s0
    t = s1 << np.uint64(17)
    s2 = s2 ^ s0
    s3 = s3 ^ s1
    s1 = s1 ^ s2
    s0 = s0 ^ s3
    s2 = s2 ^ t
    s3 = _rotl(s3, np.uint64(45))
    u = (np.float64(result >> np.uint64(11)) + 1.0) * (2.0**-53)
    return u, s0, s1, s2, s3


@nb.njit(cache=True, parallel=True)
def _batch(n_paths, seed, antithetic,
           x0, regime0,
           mu1, sig1, lam1, th1, mu2, sig2, lam2, th2, rho,
           d1, b1, b2, dt, horizon, tail_slope,
           totals, tails):
    df_dt = math.exp(-rho * dt)
    sqdt = math.sqrt(dt)
    for p in nb.prange(n_paths):
        if antithetic:
            key = np.uint64(p >> 1)
            sign = 1.0 if (p & 1) == 0 else -1.0
        else:
            key = np.uint64(p)
            sign = 1.0
        s0, s1, s2, s3 = _path_state(np.uint64(seed), key)
        spare = 0.0
        has_spare = False

        t = 0.0
        disc = 1.0
        regime = regime0
        x = x0
        total = 0.0
        tail = 0.0
        dead = False

        # entry action at t = 0
        theta = th1 if regime == 1 else th2
        if x <= theta:
            dead = True
        elif regime == 1 and not math.isnan(d1) and x <= d1:
            total += x - th1
            dead = True
        else:
            barrier = b1 if regime == 1 else b2
            if x > barrier:
                total += x - barrier
                x = barrier
                if x <= theta:
                    dead = True

        if not dead:
            lam = lam1 if regime == 1 else lam2
            u, s0, s1, s2, s3 = _uniform(s0, s1, s2, s3)
            t_switch = -math.log(u) / lam

            while True:
                rem_h = horizon - t
                if rem_h <= 0.0:
                    tail = disc * (x + tail_slope)
                    break
                h = dt
                full_step = True
                at_switch = False
                rem_sw = t_switch - t
                if rem_sw <= h:
                    h = rem_sw
                    full_step = False
                    at_switch = True
                if rem_h <= h:
                    h = rem_h
                    full_step = False
                    at_switch = False

                if has_spare:
                    z = spare
                    has_spare = False
                else:
                    u1, s0, s1, s2, s3 = _uniform(s0, s1, s2, s3)
                    u2, s0, s1, s2, s3 = _uniform(s0, s1, s2, s3)
                    r = math.sqrt(-2.0 * math.log(u1))
                    ang = _TWO_PI * u2
                    z = r * math.cos(ang)
                    spare = r * math.sin(ang)
                    has_spare = True
                z *= sign

                if regime == 1:
                    mu = mu1
                    sig = sig1
                    theta = th1
                    barrier = b1
                else:
                    mu = mu2
                    sig = sig2
                    theta = th2
                    barrier = b2
                x_prev = x
                if full_step:
                    x += mu * dt + sig * sqdt * z
                    t += dt
                    disc *= df_dt
                else:
                    x += mu * h + sig * math.sqrt(h) * z
                    t += h
                    disc = math.exp(-rho * t)
                if x <= theta:
                    break
                if h > 0.0 and (regime == 2 or math.isnan(d1)):
                    expo = -2.0 * (x_prev - theta) * (x - theta) / (sig * sig * h)
                    if expo > -40.0:
                        u, s0, s1, s2, s3 = _uniform(s0, s1, s2, s3)
                        if u < math.exp(expo):
                            break
                if regime == 1 and not math.isnan(d1) and x <= d1:
                    total += disc * (x - th1)
                    break
                if x > barrier:
                    total += disc * (x - barrier)
                    x = barrier
                if at_switch:
                    regime = 3 - regime
                    theta = th1 if regime == 1 else th2
                    if x <= theta:
                        break
                    if regime == 1 and not math.isnan(d1) and x <= d1:
                        total += disc * (x - th1)
                        break
                    barrier = b1 if regime == 1 else b2
                    if x > barrier:
                        total += disc * (x - barrier)
                        x = barrier
                        if x <= theta:
                            break
                    lam = lam1 if regime == 1 else lam2
                    u, s0, s1, s2, s3 = _uniform(s0, s1, s2, s3)
                    t_switch = t - math.log(u) / lam

        totals[p] = total
        tails[p] = tail


def estimate_value(policy, params: ModelParams, x0: float, regime0: int,
                   config: SimConfig) -> SimEstimate:
    """Mean discounted dividends over n_paths independent controlled paths.

    Deterministic for a fixed (seed, config, policy, params): paths use
    counter-based streams indexed by path number and the reduction is
    numpy's pairwise sum over the path-indexed array.  With antithetic
    pairing, consecutive paths share a stream with mirrored Gaussian draws
    and the standard error comes from the pair means.
    """
    d1, b1, b2 = _policy_numbers(policy, params)
    horizon = config.horizon
    if horizon is None:
        horizon = default_horizon(params, policy, x0)
    n = config.n_paths
    if config.antithetic and n % 2:
        raise ValueError("antithetic sampling needs an even n_paths")
    totals = np.empty(n, dtype=np.float64)
    tails = np.empty(n, dtype=np.float64)
    _batch(
        n, config.seed, config.antithetic, float(x0), int(regime0),
        params.mu1, params.sigma1, params.lambda1, params.theta1,
        params.mu2, params.sigma2, params.lambda2, params.theta2, params.rho,
        d1, b1, b2, config.dt, float(horizon),
        max(params.mu1, params.mu2, 0.0) / params.rho,
        totals, tails,
    )
    if config.antithetic:
        samples = 0.5 * (totals[0::2] + totals[1::2])
    else:
        samples = totals
    mean = float(np.mean(samples))
    stderr = 0.0 if samples.size < 2 else float(
        np.std(samples, ddof=1) / math.sqrt(samples.size)
    )
    cap = max(b1, b2, x0)
    bound = math.exp(-params.rho * horizon) * _tail_cap(params, cap) if horizon > 0.0 \
        else _tail_cap(params, cap)
    if x0 <= params.theta(regime0):
        bound = 0.0
    return SimEstimate(mean=mean, stderr=stderr, n_paths=n,
                       discount_tail_bound=bound, horizon=float(horizon))


@dataclass(frozen=True)
class ProbeResult:
    """Comparison of a perturbed policy's payoff against the certified value."""

    estimate: SimEstimate
    analytic_value: float
    difference: float          # estimate.mean - analytic_value
    dominated: bool            # difference <= 3 stderr + tail bound

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate.to_dict(),
            "analytic_value": self.analytic_value,
            "difference": self.difference,
            "dominated": self.dominated,
        }


def suboptimality_probe(params: ModelParams, x0: float, regime0: int,
                        perturbed_policy, config: SimConfig,
                        selection: Optional[Selection] = None) -> ProbeResult:
    """Estimate the payoff of an admissible perturbed policy and compare it
    with the certified value function, which must dominate it.

    ``selection`` defaults to solving the parameters fresh.
    """
    if selection is None:
        from .policy import select_policy

        selection = select_policy(params)
    analytic = float(selection.value.eval(x0, regime0, 0))
    est = estimate_value(perturbed_policy, params, x0, regime0, config)
    diff = est.mean - analytic
    slack = 3.0 * est.stderr + est.discount_tail_bound
    return ProbeResult(estimate=est, analytic_value=analytic,
                       difference=diff, dominated=bool(diff <= slack))

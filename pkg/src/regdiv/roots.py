"""Characteristic exponents of the coupled value ODEs.

Per regime i, homogeneous solutions of the scalar equation
``0.5 sigma^2 g'' + mu g' - (lambda + rho) g = 0`` are spanned by
``exp(alpha x)`` where alpha solves ``phi_i(alpha) = 0`` with

    phi_i(alpha) = -0.5 sigma_i^2 alpha^2 - mu_i alpha + (lambda_i + rho).

The coupled two-regime system is spanned by ``exp(alpha x)`` with alpha a
root of the quartic ``phi_1(alpha) phi_2(alpha) = lambda_1 lambda_2``; for
admissible parameters these come as four reals a3 < a4 < 0 < a5 < a6, and
the two regimes' coefficients on a common exponent are locked in the ratio
``phi_1(alpha)/lambda_1 = lambda_2/phi_2(alpha)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelError, ModelParams

__all__ = [
    "RootIsolationFailure",
    "DegenerateRatio",
    "CharRoots",
    "phi",
    "quadratic_roots",
    "quartic_roots",
    "coefficient_ratio",
    "char_roots",
]

# Complex eigenvalue pairs closer to the real axis than this are numerical
# noise on a genuinely real root; anything farther is a real pathology.
_IMAG_TOL = 1e-8


class RootIsolationFailure(ModelError):
    """Four real quartic roots with the expected sign pattern were not found."""


class DegenerateRatio(ModelError):
    """phi_2 vanished where the coupled-coefficient ratio was requested."""


def phi(alpha, mu: float, sigma: float, lam: float, rho: float):
    """The per-regime characteristic polynomial phi(alpha)."""
    return -0.5 * sigma * sigma * alpha * alpha - mu * alpha + (lam + rho)


def quadratic_roots(mu: float, sigma: float, lam: float, rho: float) -> tuple[float, float]:
    """Both real roots of phi(alpha) = 0, returned as (positive, negative).

    The discriminant mu^2 + 2 sigma^2 (lam + rho) is strictly positive for
    sigma > 0 and lam + rho > 0, so the roots are always real and straddle 0.
    """
    disc = np.sqrt(mu * mu + 2.0 * sigma * sigma * (lam + rho))
    alpha_pos = (-mu + disc) / (sigma * sigma)
    alpha_neg = (-mu - disc) / (sigma * sigma)
    return float(alpha_pos), float(alpha_neg)


def _quartic_poly(params: ModelParams) -> np.ndarray:
    """Coefficients (highest first) of phi_1 * phi_2 - lambda_1 * lambda_2."""
    p1 = np.array([-0.5 * params.sigma1**2, -params.mu1, params.lambda1 + params.rho])
    p2 = np.array([-0.5 * params.sigma2**2, -params.mu2, params.lambda2 + params.rho])
    poly = np.polymul(p1, p2)
    poly[-1] -= params.lambda1 * params.lambda2
    return poly


def _quartic_value(alpha, params: ModelParams):
    return phi(alpha, params.mu1, params.sigma1, params.lambda1, params.rho) * phi(
        alpha, params.mu2, params.sigma2, params.lambda2, params.rho
    ) - params.lambda1 * params.lambda2


def _newton_polish(alpha: float, params: ModelParams, iters: int = 4) -> float:
    poly = _quartic_poly(params)
    dpoly = np.polyder(poly)
    for _ in range(iters):
        f = np.polyval(poly, alpha)
        df = np.polyval(dpoly, alpha)
        if df == 0.0:
            break
        step = f / df
        alpha -= step
        if abs(step) < 1e-15 * max(1.0, abs(alpha)):
            break
    return alpha


def _quartic_companion(params: ModelParams) -> np.ndarray:
    # np.roots is the companion-matrix eigenvalue method on the monic form.
    raw = np.roots(_quartic_poly(params))
    roots = []
    for z in raw:
        if abs(z.imag) > _IMAG_TOL * max(1.0, abs(z.real)):
            raise RootIsolationFailure(
                f"quartic root {z} has a non-negligible imaginary part; "
                "parameters outside the regime where all four roots are real"
            )
        roots.append(_newton_polish(float(z.real), params))
    return np.sort(np.array(roots))


def _quartic_bisect(params: ModelParams) -> np.ndarray:
    """Derivative-free fallback: bracket each root by sign changes.

    The quartic opens upward at +-inf (leading coefficient
    sigma1^2 sigma2^2 / 4 > 0) and is positive at 0, so each of the four
    roots lies in a sign-change bracket scanned over [-B, B].
    """
    a1, a2 = quadratic_roots(params.mu1, params.sigma1, params.lambda1, params.rho)
    a7, a8 = quadratic_roots(params.mu2, params.sigma2, params.lambda2, params.rho)
    bound = 10.0 * max(abs(a1), abs(a2), abs(a7), abs(a8))
    grid = np.linspace(-bound, bound, 20001)
    vals = _quartic_value(grid, params)
    roots = []
    for lo, hi, flo, fhi in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if flo == 0.0:
            roots.append(float(lo))
            continue
        if flo * fhi < 0.0:
            a, b = float(lo), float(hi)
            fa = float(flo)
            for _ in range(200):
                m = 0.5 * (a + b)
                fm = float(_quartic_value(m, params))
                if fm == 0.0 or (b - a) < 1e-15 * max(1.0, abs(m)):
                    a = b = m
                    break
                if fa * fm < 0.0:
                    b = m
                else:
                    a, fa = m, fm
            roots.append(0.5 * (a + b))
    if len(roots) != 4:
        raise RootIsolationFailure(
            f"expected 4 sign-change brackets in [-{bound}, {bound}], found {len(roots)}"
        )
    return np.sort(np.array([_newton_polish(r, params) for r in roots]))


def quartic_roots(params: ModelParams, backend: str = "companion") -> tuple[float, float, float, float]:
    """The four real roots a3 < a4 < 0 < a5 < a6 of phi_1 phi_2 = lambda_1 lambda_2.

    ``backend`` selects "companion" (eigenvalues of the companion matrix,
    Newton-polished) or "bisect" (bracketed bisection); both must agree to
    1e-9 on admissible parameters and the second serves as an independent
    cross-check of the first.

    Raises :class:`RootIsolationFailure` when four real roots with the
    expected sign pattern cannot be isolated.
    """
    if backend == "companion":
        roots = _quartic_companion(params)
    elif backend == "bisect":
        roots = _quartic_bisect(params)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if len(roots) != 4 or not (roots[0] < roots[1] < 0.0 < roots[2] < roots[3]):
        raise RootIsolationFailure(
            f"quartic roots {roots} do not satisfy a3 < a4 < 0 < a5 < a6"
        )
    scale = abs(params.lambda1 * params.lambda2)
    resid = np.abs(_quartic_value(roots, params))
    if np.any(resid > 1e-9 * max(scale, 1.0)):
        raise RootIsolationFailure(f"quartic residuals {resid} exceed tolerance")
    return tuple(float(r) for r in roots)


def coefficient_ratio(alpha_j: float, params: ModelParams) -> float:
    """Ratio locking the regime-2 coefficient to the regime-1 coefficient on
    a common quartic exponent: returns phi_1(alpha_j)/lambda_1.

    At a true quartic root this equals lambda_2/phi_2(alpha_j); the identity
    is verified to 1e-9 and a stale or perturbed exponent is rejected.
    """
    p2 = phi(alpha_j, params.mu2, params.sigma2, params.lambda2, params.rho)
    if abs(p2) < 1e-12 * (params.lambda2 + params.rho):
        raise DegenerateRatio(f"phi_2({alpha_j}) ~ 0; not a quartic root")
    r1 = phi(alpha_j, params.mu1, params.sigma1, params.lambda1, params.rho) / params.lambda1
    r2 = params.lambda2 / p2
    if abs(r1 - r2) > 1e-9 * max(1.0, abs(r1)):
        raise DegenerateRatio(
            f"ratio identity violated at alpha={alpha_j}: {r1} vs {r2}; "
            "exponent is not a root of the coupled quartic"
        )
    return float(r1)


@dataclass(frozen=True)
class CharRoots:
    """All eight characteristic exponents for one parameter set.

    alpha1 > 0 > alpha2 solve phi_1 = 0, alpha7 > 0 > alpha8 solve phi_2 = 0,
    and alpha3 < alpha4 < 0 < alpha5 < alpha6 solve the coupled quartic.
    ``ratios`` are the coupled-coefficient ratios at the quartic roots, and
    the characteristic polynomials stay evaluable through phi1/phi2.
    """

    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    alpha5: float
    alpha6: float
    alpha7: float
    alpha8: float
    ratios: tuple[float, float, float, float]
    params: ModelParams = None

    @property
    def quartic(self) -> tuple[float, float, float, float]:
        return (self.alpha3, self.alpha4, self.alpha5, self.alpha6)

    def phi1(self, alpha):
        p = self.params
        return phi(alpha, p.mu1, p.sigma1, p.lambda1, p.rho)

    def phi2(self, alpha):
        p = self.params
        return phi(alpha, p.mu2, p.sigma2, p.lambda2, p.rho)


def char_roots(params: ModelParams) -> CharRoots:
    a1, a2 = quadratic_roots(params.mu1, params.sigma1, params.lambda1, params.rho)
    a7, a8 = quadratic_roots(params.mu2, params.sigma2, params.lambda2, params.rho)
    aq = quartic_roots(params)
    ratios = tuple(coefficient_ratio(a, params) for a in aq)
    return CharRoots(a1, a2, *aq, a7, a8, ratios=ratios, params=params)

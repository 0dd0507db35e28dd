import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regdiv.model import ModelParams, validate
from regdiv.roots import (
    DegenerateRatio,
    char_roots,
    coefficient_ratio,
    phi,
    quadratic_roots,
    quartic_roots,
)

from conftest import table1


def test_driftless_roots_are_symmetric():
    # closed form: +-sqrt(2 (lam + rho) / sigma^2) = +-sqrt(12)
    pos, neg = quadratic_roots(mu=0.0, sigma=0.5, lam=1.0, rho=0.5)
    expected = math.sqrt(2.0 * 1.5 / 0.25)
    assert pos == pytest.approx(expected, abs=1e-12)
    assert neg == pytest.approx(-expected, abs=1e-12)


def test_regime1_roots_satisfy_phi():
    pos, neg = quadratic_roots(mu=-0.8, sigma=0.5, lam=10.0, rho=0.5)
    assert pos > 0.0 > neg
    for a in (pos, neg):
        assert abs(phi(a, -0.8, 0.5, 10.0, 0.5)) < 1e-12 * max(1.0, a * a)


@settings(max_examples=100, deadline=None)
@given(
    mu=st.floats(min_value=-3, max_value=3),
    sigma=st.floats(min_value=0.05, max_value=3),
    lam=st.floats(min_value=0.05, max_value=20),
    rho=st.floats(min_value=0.05, max_value=2),
)
def test_vieta_product(mu, sigma, lam, rho):
    pos, neg = quadratic_roots(mu, sigma, lam, rho)
    assert pos * neg == pytest.approx(-2.0 * (lam + rho) / sigma**2, rel=1e-10)


def test_zero_is_never_a_quartic_root():
    p = table1(0.9)
    # phi1(0) phi2(0) - lam1 lam2 = rho (lam1 + lam2 + rho) > 0
    val = phi(0.0, p.mu1, p.sigma1, p.lambda1, p.rho) * phi(
        0.0, p.mu2, p.sigma2, p.lambda2, p.rho
    ) - p.lambda1 * p.lambda2
    assert val == pytest.approx(p.rho * (p.lambda1 + p.lambda2 + p.rho), rel=1e-12)
    assert val > 0.0


def test_quartic_backends_agree():
    p = table1(0.9)
    comp = np.array(quartic_roots(p, backend="companion"))
    bis = np.array(quartic_roots(p, backend="bisect"))
    np.testing.assert_allclose(comp, bis, rtol=0, atol=1e-9)


def test_quartic_residuals_and_ordering():
    p = table1(0.9)
    roots = quartic_roots(p)
    assert roots[0] < roots[1] < 0.0 < roots[2] < roots[3]
    scale = p.lambda1 * p.lambda2
    for a in roots:
        resid = phi(a, p.mu1, p.sigma1, p.lambda1, p.rho) * phi(
            a, p.mu2, p.sigma2, p.lambda2, p.rho
        ) - scale
        assert abs(resid) < 1e-9 * scale


def test_symmetric_regimes_give_paired_roots():
    p = validate(ModelParams(mu1=0.0, mu2=0.0, sigma1=0.7, sigma2=0.7,
                             lambda1=2.0, lambda2=2.0, theta1=-0.2, theta2=0.2,
                             rho=0.5))
    a3, a4, a5, a6 = quartic_roots(p)
    assert a3 == pytest.approx(-a6, rel=1e-9)
    assert a4 == pytest.approx(-a5, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(
    mu1=st.floats(min_value=-2, max_value=0),
    mu2=st.floats(min_value=-2, max_value=2),
    sigma1=st.floats(min_value=0.2, max_value=2),
    sigma2=st.floats(min_value=0.2, max_value=2),
    lam1=st.floats(min_value=0.2, max_value=12),
    lam2=st.floats(min_value=0.2, max_value=12),
)
def test_backends_agree_on_random_params(mu1, mu2, sigma1, sigma2, lam1, lam2):
    p = validate(ModelParams(mu1=mu1, mu2=mu2, sigma1=sigma1, sigma2=sigma2,
                             lambda1=lam1, lambda2=lam2, theta1=-0.2,
                             theta2=0.2, rho=0.5))
    comp = np.array(quartic_roots(p, backend="companion"))
    bis = np.array(quartic_roots(p, backend="bisect"))
    np.testing.assert_allclose(comp, bis, rtol=0, atol=1e-9)


def test_coefficient_ratio_identity():
    p = table1(0.9)
    for a in quartic_roots(p):
        r = coefficient_ratio(a, p)
        cross = p.lambda2 / phi(a, p.mu2, p.sigma2, p.lambda2, p.rho)
        assert r == pytest.approx(cross, abs=1e-9 * max(1.0, abs(r)))


def test_coefficient_ratio_rejects_perturbed_root():
    p = table1(0.9)
    a3 = quartic_roots(p)[0]
    with pytest.raises(DegenerateRatio):
        coefficient_ratio(a3 + 1e-3, p)


def test_char_roots_bundle():
    p = table1(0.9)
    roots = char_roots(p)
    assert roots.alpha1 > 0 > roots.alpha2
    assert roots.alpha7 > 0 > roots.alpha8
    assert roots.alpha3 < roots.alpha4 < 0 < roots.alpha5 < roots.alpha6
    assert len(roots.ratios) == 4

import pytest

from regdiv.model import ModelParams, validate


BASE = dict(
    mu1=-0.8, sigma1=0.5, lambda1=10.0, theta1=-0.2,
    sigma2=0.5, lambda2=1.0, theta2=0.2, rho=0.5,
)


def table1(mu2: float, **overrides):
    """The benchmark parameter set with a chosen regime-2 drift."""
    fields = dict(BASE, mu2=mu2)
    fields.update(overrides)
    return validate(ModelParams(**fields))


@pytest.fixture
def params_factory():
    return table1

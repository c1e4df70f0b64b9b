import pytest

from bartree.bar_model import BarModel
from bartree.quadrature import QuadratureRule
from bartree.smoothing import gaussian_kernel


@pytest.fixture(scope="session")
def quad64():
    return QuadratureRule.gauss_hermite(64)


@pytest.fixture(scope="session")
def quad96():
    return QuadratureRule.gauss_hermite(96)


@pytest.fixture(scope="session")
def gauss_K():
    return gaussian_kernel()


@pytest.fixture(scope="session")
def model_half():
    return BarModel(0.5, 1.0)

import numpy as np
import pytest

from coopmac import LinkStat, build_quadrature


@pytest.fixture(scope="session")
def rule15():
    return build_quadrature(15)


@pytest.fixture(scope="session")
def rule24():
    return build_quadrature(24)


@pytest.fixture()
def rng():
    return np.random.default_rng(0xC0FFEE)


def links(mu, sigma, n):
    return tuple(LinkStat(mu_db=mu, sigma_db=sigma) for _ in range(n))

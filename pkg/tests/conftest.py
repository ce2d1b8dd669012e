import numpy as np
import pytest

from netamp.priors import PriorSpec, QuadratureRule, spike_slab


@pytest.fixture(scope="session")
def quad():
    return QuadratureRule.gauss_hermite(41)


@pytest.fixture(scope="session")
def quad_double():
    return QuadratureRule.gauss_hermite(82)


@pytest.fixture(scope="session")
def pm1():
    """rho = 0.5 spike-slab on {-1, +1}."""
    return spike_slab(0.5, [-1.0, 1.0])


@pytest.fixture(scope="session")
def pm7():
    """rho = 0.7 spike-slab on {-1, +1} (the reconstruction-benchmark prior)."""
    return spike_slab(0.7, [-1.0, 1.0])


@pytest.fixture(scope="session")
def five_atom():
    """rho = 0.4 with uniform slab on {-2,-1,0,1,2} (the MI-benchmark prior)."""
    return spike_slab(0.4, [-2.0, -1.0, 0.0, 1.0, 2.0])


@pytest.fixture(scope="session")
def b_indep():
    """B independent of Sigma (same conditional atoms on both sides)."""
    atoms = ((-1.0, 0.5), (1.0, 0.5))
    return PriorSpec(rho=0.4, atoms0=atoms, atoms1=atoms)


@pytest.fixture(scope="session")
def b_zero():
    """Degenerate B = 0 prior."""
    return PriorSpec(rho=0.5, atoms0=((0.0, 1.0),), atoms1=((0.0, 1.0),))


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)

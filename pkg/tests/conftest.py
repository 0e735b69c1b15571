import numpy as np
import pytest

from latmin.coefficients import CoefficientField
from latmin.functionals import ProblemParams
from latmin.lattice import LatticeBox
from latmin.minimize import minimize_constrained


def make_params(dim=2, p=2.0, q=4.0, a=1.0, b=1.0, beta=1.0):
    return ProblemParams(
        dim=dim,
        p=p,
        q=q,
        a=CoefficientField.constant(a),
        b=CoefficientField.constant(b),
        beta=beta,
    )


@pytest.fixture(scope="session")
def std_params():
    """The workhorse case: N=2, p=2, q=4, a=1, b=1, beta=1."""
    return make_params()


@pytest.fixture(scope="session")
def solved_r8(std_params):
    """Converged minimizer of the workhorse case on B_8 (reused across tests)."""
    result = minimize_constrained(std_params, LatticeBox(2, 8), tol=1e-8)
    assert result.converged
    return result


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)

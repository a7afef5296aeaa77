import numpy as np
import pytest

import maxhom as mh


@pytest.fixture(scope="session")
def cubic():
    return mh.cubic_lattice()


@pytest.fixture(scope="session")
def grid16(cubic):
    return mh.GridSpec((16, 16, 16), cubic)


@pytest.fixture(scope="session")
def grid32(cubic):
    return mh.GridSpec((32, 32, 32), cubic)


@pytest.fixture(scope="session")
def trig_eta(grid32):
    return mh.generate_coefficient(
        mh.CoefficientDescriptor(
            "trig_isotropic", {"base": 2.0, "amplitude": 1.0, "axis": 0}),
        grid32)


@pytest.fixture(scope="session")
def trig_mu(grid32):
    return mh.generate_coefficient(
        mh.CoefficientDescriptor(
            "trig_isotropic", {"base": 3.0, "amplitude": 1.2, "axis": 1}),
        grid32)


@pytest.fixture(scope="session")
def cell_eta(trig_eta):
    return mh.solve_scalar_cell(trig_eta, tol=1e-11)


@pytest.fixture(scope="session")
def cell_mu(trig_mu):
    return mh.solve_scalar_cell(trig_mu, tol=1e-11)


@pytest.fixture(scope="session")
def matrix_eta(grid32):
    return mh.generate_coefficient(
        mh.CoefficientDescriptor(
            "trig_matrix",
            {"base": [2.0, 2.5, 3.0], "amplitude": 0.45, "modes": [1, 1, 1]},
            seed=3),
        grid32)


@pytest.fixture(scope="session")
def matrix_mu(grid32):
    return mh.generate_coefficient(
        mh.CoefficientDescriptor(
            "trig_matrix",
            {"base": [1.5, 2.0, 2.5], "amplitude": 0.45, "modes": [1, 1, 1]},
            seed=4),
        grid32)


@pytest.fixture(scope="session")
def cell_matrix_eta(matrix_eta):
    return mh.solve_scalar_cell(matrix_eta, tol=1e-11)


@pytest.fixture(scope="session")
def cell_matrix_mu(matrix_mu):
    return mh.solve_scalar_cell(matrix_mu, tol=1e-11)


@pytest.fixture(scope="session")
def correctors_r(cell_eta, cell_mu):
    return mh.solve_vector_cell(cell_eta, cell_mu, "r", tol=1e-10)


def random_spd_basis(rng):
    """A well-conditioned random lattice basis (rows)."""
    while True:
        b = rng.standard_normal((3, 3)) + 2.0 * np.eye(3)
        if abs(np.linalg.det(b)) > 0.3 * np.prod(np.linalg.norm(b, axis=1)):
            return b

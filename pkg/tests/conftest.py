import numpy as np
import pytest

from asmd.fixtures import LINEAR_N2, QUADRATIC_N3, load_fixture
from asmd.problems import reference_optimum


@pytest.fixture(scope="session")
def quad_problem():
    return load_fixture(QUADRATIC_N3)


@pytest.fixture(scope="session")
def linear_problem():
    return load_fixture(LINEAR_N2)


@pytest.fixture(scope="session")
def quad_reference(quad_problem):
    return reference_optimum(quad_problem, 1e-3)


def random_simplex_points(rng, n, count):
    return rng.dirichlet(np.ones(n), size=count)


def assert_instances_equal(a, b):
    from asmd.oracle import LinearObjective, QuadraticObjective

    assert a.name == b.name
    assert a.dimension == b.dimension
    assert a.geometry_kind == b.geometry_kind
    assert a.oracle_mode == b.oracle_mode
    assert a.margin == b.margin
    assert np.array_equal(a.feasible_witness, b.feasible_witness)
    assert type(a.objective) is type(b.objective)
    if isinstance(a.objective, QuadraticObjective):
        assert np.array_equal(a.objective.matrix, b.objective.matrix)
    else:
        assert isinstance(a.objective, LinearObjective)
        assert np.array_equal(a.objective.coefficients, b.objective.coefficients)
    assert a.constraint.count == b.constraint.count
    assert np.array_equal(a.constraint.offsets, b.constraint.offsets)
    for (ia, va), (ib, vb) in zip(a.constraint.terms, b.constraint.terms):
        assert np.array_equal(ia, ib)
        assert np.array_equal(va, vb)

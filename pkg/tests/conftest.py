"""Shared fixtures for the test suite."""
import numpy as np
import pytest

from gwcheck import graphs
from gwcheck.gwishart import GWishartParams


@pytest.fixture(scope="session")
def bench():
    return graphs.benchmark_graphs()


@pytest.fixture(scope="session")
def graph_a(bench):
    return bench["a"]


@pytest.fixture(scope="session")
def graph_b(bench):
    return bench["b"]


@pytest.fixture(scope="session")
def graph_c(bench):
    return bench["c"]


@pytest.fixture(scope="session")
def graph_d(bench):
    return bench["d"]


@pytest.fixture
def params_a(graph_a):
    return GWishartParams(delta=10.0, d=np.eye(4), graph=graph_a)


@pytest.fixture
def params_b(graph_b):
    return GWishartParams(delta=10.0, d=np.eye(4), graph=graph_b)


@pytest.fixture
def params_c(graph_c):
    return GWishartParams(delta=10.0, d=np.eye(10), graph=graph_c)


@pytest.fixture
def params_d(graph_d):
    return GWishartParams(delta=10.0, d=np.eye(10), graph=graph_d)


def random_pd_matrix(p, gen, scale=1.0):
    """Random symmetric PD matrix: A A^T + p I, scaled."""
    a = gen.standard_normal((p, p))
    m = a @ a.T + p * np.eye(p)
    return scale * 0.5 * (m + m.T)

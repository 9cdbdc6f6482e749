import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qhydro.lattice import build_lattice, discrete_laplacian, laplacian_matrix


def test_one_dimensional_example():
    g = build_lattice(1, 8)
    assert g.L == 8
    assert g.sites[:, 0].tolist() == list(range(1, 8))
    assert g.sites[g.boundary, 0].tolist() == [1, 7]
    assert g.exit_multiplicity[g.boundary].tolist() == [1, 1]
    assert g.sites[g.interior, 0].tolist() == [2, 3, 4, 5, 6]


def test_empty_interior_is_valid():
    g = build_lattice(1, 3)
    assert g.sites[:, 0].tolist() == [1, 2]
    assert len(g.interior) == 0
    assert len(g.boundary) == 2


def test_square_corners():
    g = build_lattice(2, 16)
    assert g.L == 4
    assert g.n_sites == 9
    corners = [g.site_index(c) for c in [(1, 1), (1, 3), (3, 1), (3, 3)]]
    assert all(g.exit_multiplicity[c] == 2 for c in corners)
    assert g.exit_multiplicity[g.site_index((2, 2))] == 0


def test_invalid_arguments():
    with pytest.raises(ValueError):
        build_lattice(1, 1)
    with pytest.raises(ValueError):
        build_lattice(0, 8)
    with pytest.raises(ValueError):
        build_lattice(1, 8, nu=0.0)


def test_density_parameter_scales_length():
    g = build_lattice(1, 8, nu=2.0)
    assert g.L == 4
    assert g.n_sites == 3


@given(d=st.integers(1, 2), N=st.integers(2, 150))
@settings(max_examples=40, deadline=None)
def test_boundary_structure(d, N):
    g = build_lattice(d, N)
    assert abs(g.L - N ** (1 / d)) < 1e-9 * N
    b, i = set(g.boundary), set(g.interior)
    assert not b & i and b | i == set(range(g.n_sites))
    assert np.all(g.exit_multiplicity + g.inside_degree() == 2 * d)
    assert np.all(g.exit_multiplicity[g.boundary] >= 1)


def test_laplacian_examples():
    g = build_lattice(1, 8)
    assert np.allclose(discrete_laplacian(g, np.full(7, 3.0))[g.interior], 0.0)
    y = g.sites[:, 0].astype(float)
    assert np.allclose(discrete_laplacian(g, 2.5 * y)[g.interior], 0.0)
    f = np.zeros(7)
    f[3] = 1.0  # site 4
    lap = discrete_laplacian(g, f)
    assert lap[2] == 1 and lap[4] == 1 and lap[3] == -2


@given(st.integers(3, 40))
@settings(max_examples=20, deadline=None)
def test_laplacian_matrix_symmetric(N):
    A = laplacian_matrix(build_lattice(1, N)).toarray()
    assert np.allclose(A, A.T)
    f = np.random.default_rng(N).normal(size=A.shape[0])
    assert f @ A @ f <= 1e-12

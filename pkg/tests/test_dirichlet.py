import numpy as np
import pytest
import scipy.sparse as sp

from bssplit.dirichlet import build_dirichlet, extend
from bssplit.fem import assemble
from bssplit.linops import SolverError
from bssplit.mesh import TriMesh, build_disk_mesh, disk_mesh_from_rings, refine_sequence


@pytest.fixture(scope="module")
def setup():
    mesh = build_disk_mesh(0.3)
    fem = assemble(mesh)
    return mesh, fem, build_dirichlet(fem)


def triangle_mesh():
    a = 2 * np.pi * np.arange(3) / 3
    return TriMesh(nodes=np.column_stack([np.cos(a), np.sin(a)]), triangles=np.array([[0, 1, 2]]),
                   boundary_edges=np.array([[0, 1, 0], [1, 2, 0], [2, 0, 0]]),
                   boundary_nodes=np.arange(3), h=np.sqrt(3.0))


def test_partition(setup):
    mesh, fem, op = setup
    both = np.concatenate([op.interior, op.boundary])
    assert np.array_equal(np.sort(both), np.arange(mesh.n_nodes))


def test_constants_extend_to_constants(setup):
    _, fem, op = setup
    u = extend(op, np.full(fem.n_surf, 2.5))
    np.testing.assert_allclose(u, 2.5, atol=1e-12)


def test_linear_data_extends_to_linear_interpolant(setup):
    mesh, fem, op = setup
    lin = 1.0 + 0.3 * mesh.nodes[:, 0] - 2.0 * mesh.nodes[:, 1]
    np.testing.assert_allclose(extend(op, lin[fem.trace_map]), lin, atol=1e-9)


def test_trace_is_copied_bit_exactly(setup, rng):
    _, fem, op = setup
    v = rng.standard_normal(fem.n_surf)
    assert np.array_equal(extend(op, v)[fem.trace_map], v)


def test_discrete_harmonicity(setup, rng):
    _, fem, op = setup
    v = rng.standard_normal(fem.n_surf)
    r = fem.stiff_bulk @ extend(op, v)
    assert np.max(np.abs(r[op.interior])) <= 1e-11 * np.linalg.norm(v)


def test_linearity(setup, rng):
    _, fem, op = setup
    v, w = rng.standard_normal(fem.n_surf), rng.standard_normal(fem.n_surf)
    np.testing.assert_allclose(extend(op, 2 * v - 3 * w), 2 * extend(op, v) - 3 * extend(op, w),
                               atol=1e-10)


def test_one_interior_node_is_weighted_average():
    mesh = disk_mesh_from_rings(1)
    fem = assemble(mesh)
    op = build_dirichlet(fem)
    (c,) = op.interior
    v = np.arange(1.0, 7.0)
    a = fem.stiff_bulk.toarray()
    expected = -(a[c, fem.trace_map] @ v) / a[c, c]
    assert extend(op, v)[c] == pytest.approx(expected, rel=1e-14)
    # regular hexagon: equal weights, so the plain mean
    assert expected == pytest.approx(v.mean(), rel=1e-12)


def test_zero_interior_is_identity():
    fem = assemble(triangle_mesh())
    op = build_dirichlet(fem)
    assert len(op.interior) == 0
    v = np.array([1.0, -2.0, 0.5])
    np.testing.assert_array_equal(extend(op, v), v)


def test_build_twice_identical(setup, rng):
    _, fem, _ = setup
    v = rng.standard_normal(fem.n_surf)
    assert np.array_equal(extend(build_dirichlet(fem), v), extend(build_dirichlet(fem), v))


def test_wrong_length_rejected(setup):
    _, fem, op = setup
    with pytest.raises(ValueError):
        extend(op, np.ones(fem.n_surf + 1))


def test_disconnected_interior_is_singular():
    fem = assemble(build_disk_mesh(0.5))
    bad = fem.stiff_bulk.tolil()
    i = np.setdiff1d(np.arange(fem.n_bulk), fem.trace_map)[0]
    bad[i, :] = 0
    bad[:, i] = 0
    broken = type(fem)(fem.mass_bulk, sp.csr_matrix(bad), fem.mass_surf, fem.stiff_surf,
                       fem.trace_map, fem.neumann_mat)
    with pytest.raises(SolverError):
        build_dirichlet(broken)


def test_extension_norm_stable_under_refinement():
    ratios = []
    for mesh in refine_sequence(0.4, 5):
        fem = assemble(mesh)
        theta = np.arctan2(*mesh.nodes[fem.trace_map].T[::-1])
        v = np.cos(3 * theta)
        u = extend(build_dirichlet(fem), v)
        ratios.append(np.sqrt(fem.mass_bulk @ u ** 2) / np.sqrt(fem.mass_surf @ v ** 2))
    growth = np.array(ratios[1:]) / np.array(ratios[:-1])
    assert np.all(growth <= 1.1)

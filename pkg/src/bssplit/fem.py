"""Bulk-surface P1 finite element matrices on a disk triangulation.

The bulk space is the P1 space on the triangulation; the surface space is the
space of traces, i.e. P1 on the polygonal boundary curve.  Mass matrices are
lumped by row sums.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .mesh import TriMesh, signed_areas

# Degree-4 six-point rule on the reference triangle: barycentric coordinates, weights.
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
TRI_BARY = np.array([
    [_A1, _A1, 1 - 2 * _A1], [_A1, 1 - 2 * _A1, _A1], [1 - 2 * _A1, _A1, _A1],
    [_A2, _A2, 1 - 2 * _A2], [_A2, 1 - 2 * _A2, _A2], [1 - 2 * _A2, _A2, _A2],
])
TRI_WEIGHTS = np.array([_W1] * 3 + [_W2] * 3)

# Three-point Gauss rule on [0, 1].
EDGE_POINTS = np.array([0.5 - 0.5 * np.sqrt(0.6), 0.5, 0.5 + 0.5 * np.sqrt(0.6)])
EDGE_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0


class AssemblyError(RuntimeError):
    pass


@dataclass(frozen=True)
class FemOperators:
    """Matrices of the semi-discrete bulk-surface system.

    Surface DOF ``k`` lives at bulk node ``trace_map[k]``; ``trace_map`` is the
    sorted list of boundary nodes.
    """

    mass_bulk: np.ndarray
    stiff_bulk: sp.csr_matrix
    mass_surf: np.ndarray
    stiff_surf: sp.csr_matrix
    trace_map: np.ndarray
    neumann_mat: sp.csr_matrix

    @property
    def n_bulk(self) -> int:
        return len(self.mass_bulk)

    @property
    def n_surf(self) -> int:
        return len(self.mass_surf)

    def trace(self, u: np.ndarray) -> np.ndarray:
        return u[self.trace_map]


def p1_gradients(nodes: np.ndarray, triangles: np.ndarray):
    """Constant gradients of the three hat functions per triangle.

    Returns ``(grads, areas)`` with ``grads`` of shape ``(T, 3, 2)``.
    """
    p = nodes[triangles]
    areas = signed_areas(nodes, triangles)
    if np.any(areas <= 0.0):
        t = int(np.argmin(areas))
        raise AssemblyError(f"triangle {t} has non-positive area {areas[t]:.3e}")
    # grad phi_i = rot90(opposite edge) / (2 |K|)
    opp = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-opp[..., 1], opp[..., 0]], axis=2) / (2.0 * areas[:, None, None])
    return grads, areas


def element_stiffness(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    grads, areas = p1_gradients(nodes, triangles)
    return np.einsum("tid,tjd->tij", grads, grads) * areas[:, None, None]


def _scatter(triangles: np.ndarray, local: np.ndarray, n: int) -> sp.csr_matrix:
    rows = np.repeat(triangles, 3, axis=1).ravel()
    cols = np.tile(triangles, (1, 3)).ravel()
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def consistent_mass_bulk(mesh: TriMesh) -> sp.csr_matrix:
    areas = mesh.areas()
    local = areas[:, None, None] * (np.ones((3, 3)) + np.eye(3)) / 12.0
    return _scatter(mesh.triangles, local, mesh.n_nodes)


def _surface_matrices(mesh: TriMesh):
    """Lumped mass and stiffness of P1 edge elements on the boundary polygon."""
    trace_map = np.asarray(mesh.boundary_nodes)
    local_index = np.full(mesh.n_nodes, -1)
    local_index[trace_map] = np.arange(len(trace_map))
    e = mesh.boundary_edges
    a, b = local_index[e[:, 0]], local_index[e[:, 1]]
    lengths = np.linalg.norm(mesh.nodes[e[:, 1]] - mesh.nodes[e[:, 0]], axis=1)
    n = len(trace_map)
    mass = np.zeros(n)
    np.add.at(mass, a, 0.5 * lengths)
    np.add.at(mass, b, 0.5 * lengths)
    k = 1.0 / lengths
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    vals = np.concatenate([k, k, -k, -k])
    stiff = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return trace_map, mass, stiff


def neumann_trace_matrix(mesh: TriMesh) -> sp.csr_matrix:
    """Edge-flux matrix ``N[i, j] = sum_e int_e (grad phi_j|K(e) . n_e) phi_i ds``."""
    grads, _ = p1_gradients(mesh.nodes, mesh.triangles)
    local_index = np.full(mesh.n_nodes, -1)
    local_index[mesh.boundary_nodes] = np.arange(mesh.n_boundary)
    e = mesh.boundary_edges
    d = mesh.nodes[e[:, 1]] - mesh.nodes[e[:, 0]]
    lengths = np.linalg.norm(d, axis=1)
    # Counterclockwise traversal: the outward normal is the tangent rotated clockwise.
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
    flux = np.einsum("tjd,td->tj", grads[e[:, 2]], normals)  # (E, 3)
    cols = mesh.triangles[e[:, 2]]
    rows, vals, cc = [], [], []
    for end in (0, 1):
        rows.append(np.repeat(local_index[e[:, end]], 3))
        cc.append(cols.ravel())
        vals.append((0.5 * lengths[:, None] * flux).ravel())
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cc))),
                         shape=(mesh.n_boundary, mesh.n_nodes))


def assemble(mesh: TriMesh) -> FemOperators:
    local = element_stiffness(mesh.nodes, mesh.triangles)
    stiff_bulk = _scatter(mesh.triangles, local, mesh.n_nodes)
    mass_bulk = np.asarray(consistent_mass_bulk(mesh).sum(axis=1)).ravel()
    trace_map, mass_surf, stiff_surf = _surface_matrices(mesh)
    return FemOperators(mass_bulk=mass_bulk, stiff_bulk=stiff_bulk, mass_surf=mass_surf,
                        stiff_surf=stiff_surf, trace_map=trace_map,
                        neumann_mat=neumann_trace_matrix(mesh))


class BulkQuadrature:
    """Precomputed degree-4 quadrature for bulk load vectors.

    ``points`` holds all quadrature points; ``load(values)`` maps field values
    at those points to the vector of integrals against the hat functions.
    """

    def __init__(self, mesh: TriMesh):
        p = mesh.nodes[mesh.triangles]  # (T, 3, 2)
        self.points = np.einsum("qi,tid->tqd", TRI_BARY, p).reshape(-1, 2)
        areas = mesh.areas()
        w = areas[:, None, None] * TRI_WEIGHTS[None, :, None] * TRI_BARY[None, :, :]  # (T, q, 3)
        nq = len(TRI_WEIGHTS)
        rows = np.repeat(mesh.triangles[:, None, :], nq, axis=1).ravel()
        cols = np.repeat(np.arange(len(self.points)).reshape(-1, nq)[:, :, None], 3, axis=2).ravel()
        self.matrix = sp.csr_matrix((w.ravel(), (rows, cols)),
                                    shape=(mesh.n_nodes, len(self.points)))
        self.weights = np.repeat(areas, nq) * np.tile(TRI_WEIGHTS, len(areas))

    def load(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values


class SurfaceQuadrature:
    """Three-point Gauss rule on every boundary edge; see :class:`BulkQuadrature`."""

    def __init__(self, mesh: TriMesh):
        local_index = np.full(mesh.n_nodes, -1)
        local_index[mesh.boundary_nodes] = np.arange(mesh.n_boundary)
        e = mesh.boundary_edges
        x0, x1 = mesh.nodes[e[:, 0]], mesh.nodes[e[:, 1]]
        lengths = np.linalg.norm(x1 - x0, axis=1)
        s = EDGE_POINTS
        self.points = (x0[:, None, :] * (1 - s)[None, :, None]
                       + x1[:, None, :] * s[None, :, None]).reshape(-1, 2)
        self.angles = np.arctan2(self.points[:, 1], self.points[:, 0])
        nq = len(s)
        w = lengths[:, None] * EDGE_WEIGHTS[None, :]  # (E, q)
        pts = np.arange(len(self.points)).reshape(-1, nq)
        rows = np.concatenate([np.repeat(local_index[e[:, 0]], nq),
                               np.repeat(local_index[e[:, 1]], nq)])
        cols = np.concatenate([pts.ravel(), pts.ravel()])
        vals = np.concatenate([(w * (1 - s)).ravel(), (w * s).ravel()])
        self.matrix = sp.csr_matrix((vals, (rows, cols)), shape=(mesh.n_boundary, len(self.points)))
        self.weights = w.ravel()

    def load(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values


def load_vector_bulk(mesh: TriMesh, f, t: float) -> np.ndarray:
    """``int_Omega f(x, t) phi_i dx`` for every node; ``f(points, t)`` is vectorised over points."""
    quad = BulkQuadrature(mesh)
    return quad.load(np.broadcast_to(f(quad.points, t), len(quad.points)))


def load_vector_surf(mesh: TriMesh, g, t: float) -> np.ndarray:
    """``int_Gamma g(theta, t) phi_i ds`` per surface DOF; ``g`` takes polar angles.

    Points on the polygonal boundary are mapped to the circle by their angle.
    """
    quad = SurfaceQuadrature(mesh)
    return quad.load(np.broadcast_to(g(quad.angles, t), len(quad.angles)))


def dump_coo(mat, path) -> None:
    """Write a sparse matrix as ``i j value`` lines."""
    coo = sp.coo_matrix(mat)
    lines = [f"{i} {j} {v!r}" for i, j, v in zip(coo.row.tolist(), coo.col.tolist(),
                                                  coo.data.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")

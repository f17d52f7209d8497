"""Quasi-uniform triangulations of the unit disk.

Nodes are placed on concentric rings (ring ``j`` carries ``6 j`` nodes at
radius ``j / J``), neighbouring rings are stitched together by an angular
merge, and interior nodes are relaxed by a few sweeps of Laplacian smoothing
with the boundary ring held fixed on the circle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Empirical ratio between the ring spacing 1/J and the resulting max triangle diameter.
_H_PER_RING = 1.35
_SMOOTHING_SWEEPS = 10


class MeshError(RuntimeError):
    pass


@dataclass(frozen=True)
class TriMesh:
    """Triangulation of the unit disk with explicit boundary structure.

    Attributes
    ----------
    nodes : (N, 2) float array
    triangles : (T, 3) int array, counterclockwise
    boundary_edges : (E, 3) int array of ``(i, j, t)``; the edge ``i -> j`` is
        traversed counterclockwise around the circle and belongs to triangle ``t``
    boundary_nodes : sorted int array of the nodes on the circle
    h : maximum triangle diameter
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_nodes: np.ndarray
    h: float
    interior_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        interior = np.setdiff1d(np.arange(len(self.nodes)), self.boundary_nodes)
        object.__setattr__(self, "interior_nodes", interior)
        for arr in (self.nodes, self.triangles, self.boundary_edges,
                    self.boundary_nodes, self.interior_nodes):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary_nodes)

    def areas(self) -> np.ndarray:
        return signed_areas(self.nodes, self.triangles)

    def diameters(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        edges = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        return np.linalg.norm(edges, axis=2).max(axis=1)

    def inradii(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        a = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
        b = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
        c = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
        return 2.0 * self.areas() / (a + b + c)

    def quality(self) -> float:
        """Max triangle diameter over min inradius."""
        return float(self.diameters().max() / self.inradii().min())

    def boundary_cycle(self) -> np.ndarray:
        """Boundary nodes in counterclockwise order, starting at the first edge."""
        return self.boundary_edges[:, 0].copy()


def signed_areas(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = nodes[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _ring_angles(j: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(6 * j) / (6 * j)


def _stitch(inner: np.ndarray, inner_ang: np.ndarray,
            outer: np.ndarray, outer_ang: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate the annulus between two closed rings by an angular merge."""
    tris = []
    if len(inner) == 1:
        c = int(inner[0])
        for k in range(len(outer)):
            tris.append((c, int(outer[k]), int(outer[(k + 1) % len(outer)])))
        return tris
    n_in, n_out = len(inner), len(outer)
    i = k = 0
    while i < n_in or k < n_out:
        # Angles of the next candidate nodes; wrap-around adds a full turn.
        next_in = inner_ang[(i + 1) % n_in] + (2 * np.pi if i + 1 >= n_in else 0.0)
        next_out = outer_ang[(k + 1) % n_out] + (2 * np.pi if k + 1 >= n_out else 0.0)
        a, b = int(inner[i % n_in]), int(outer[k % n_out])
        if k < n_out and (i >= n_in or next_out <= next_in):
            tris.append((a, b, int(outer[(k + 1) % n_out])))
            k += 1
        else:
            tris.append((a, b, int(inner[(i + 1) % n_in])))
            i += 1
    return tris


def _laplace_smooth(nodes: np.ndarray, triangles: np.ndarray, fixed: np.ndarray,
                    sweeps: int) -> np.ndarray:
    n = len(nodes)
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e = np.unique(np.sort(e, axis=1), axis=0)
    deg = np.bincount(e.ravel(), minlength=n).astype(float)
    free = np.ones(n, dtype=bool)
    free[fixed] = False
    x = nodes.copy()
    for _ in range(sweeps):
        acc = np.zeros_like(x)
        np.add.at(acc, e[:, 0], x[e[:, 1]])
        np.add.at(acc, e[:, 1], x[e[:, 0]])
        trial = x.copy()
        trial[free] = acc[free] / deg[free, None]
        if np.any(signed_areas(trial, triangles) <= 0.0):
            break
        x = trial
    return x


def _boundary_edges(triangles: np.ndarray) -> np.ndarray:
    """Edges used by exactly one triangle, oriented as in that triangle."""
    local = [(0, 1), (1, 2), (2, 0)]
    owner: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    for t, tri in enumerate(triangles):
        for a, b in local:
            i, j = int(tri[a]), int(tri[b])
            owner.setdefault((min(i, j), max(i, j)), []).append((i, j, t))
    bad = [k for k, v in owner.items() if len(v) > 2]
    if bad:
        raise MeshError(f"edge {bad[0]} shared by more than two triangles")
    return np.array([v[0] for v in owner.values() if len(v) == 1], dtype=np.int64)


def _order_cycle(edges: np.ndarray) -> np.ndarray:
    nxt = {int(i): k for k, (i, _, _) in enumerate(edges)}
    order = [0]
    while len(order) < len(edges):
        k = nxt[int(edges[order[-1], 1])]
        if k == 0:
            raise MeshError("boundary is not a single closed curve")
        order.append(k)
    if int(edges[order[-1], 1]) != int(edges[0, 0]):
        raise MeshError("boundary is not a single closed curve")
    return edges[order]


def disk_mesh_from_rings(n_rings: int, smoothing_sweeps: int = _SMOOTHING_SWEEPS) -> TriMesh:
    """Build the ring mesh with ``n_rings`` rings around the center node."""
    if n_rings < 1:
        raise ValueError("need at least one ring")
    coords = [np.zeros((1, 2))]
    rings = [np.array([0])]
    angles = [np.zeros(1)]
    start = 1
    for j in range(1, n_rings + 1):
        ang = _ring_angles(j)
        coords.append((j / n_rings) * np.column_stack([np.cos(ang), np.sin(ang)]))
        rings.append(np.arange(start, start + len(ang)))
        angles.append(ang)
        start += len(ang)
    nodes = np.concatenate(coords)

    tris = []
    for j in range(1, n_rings + 1):
        tris += _stitch(rings[j - 1], angles[j - 1], rings[j], angles[j])
    triangles = np.array(tris, dtype=np.int64)
    # The merge emits (inner, outer, ...) triples whose orientation depends on the branch.
    flip = signed_areas(nodes, triangles) < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    boundary = np.sort(rings[-1])
    nodes = _laplace_smooth(nodes, triangles, boundary, smoothing_sweeps)
    # Project the boundary ring back onto the circle to machine precision.
    nodes[boundary] /= np.linalg.norm(nodes[boundary], axis=1)[:, None]

    areas = signed_areas(nodes, triangles)
    if np.any(areas <= 0.0):
        t = int(np.argmin(areas))
        raise MeshError(f"degenerate triangle {t}: vertices {triangles[t].tolist()}, "
                        f"signed area {areas[t]:.3e}")
    bedges = _order_cycle(_boundary_edges(triangles))
    mesh = TriMesh(nodes=nodes, triangles=triangles, boundary_edges=bedges,
                   boundary_nodes=boundary, h=0.0)
    object.__setattr__(mesh, "h", float(mesh.diameters().max()))
    return mesh


def build_disk_mesh(h_target: float) -> TriMesh:
    """Quasi-uniform triangulation of the unit disk with mesh width close to ``h_target``."""
    if not 0.0 < h_target <= 1.0:
        raise ValueError(f"h_target must lie in (0, 1], got {h_target}")
    n_rings = max(1, int(round(_H_PER_RING / h_target)))
    return disk_mesh_from_rings(n_rings)


def refine_sequence(h0: float, levels: int) -> list[TriMesh]:
    """Meshes with widths ``h0 * 2**(-k/2)``, ``k = 0, ..., levels-1``.

    The meshes are regenerated rather than nested.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    return [build_disk_mesh(h0 * 2.0 ** (-k / 2)) for k in range(levels)]


def write_mesh(mesh: TriMesh, path) -> None:
    """Plain-text export: header, then node, triangle and boundary-edge lines."""
    lines = [f"nodes {mesh.n_nodes} triangles {len(mesh.triangles)} "
             f"boundary_edges {len(mesh.boundary_edges)}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    lines += [f"{i} {j} {t}" for i, j, t in mesh.boundary_edges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> TriMesh:
    rows = Path(path).read_text().splitlines()
    head = rows[0].split()
    n, t, e = int(head[1]), int(head[3]), int(head[5])
    nodes = np.array([[float(s) for s in r.split()] for r in rows[1:1 + n]])
    tris = np.array([[int(s) for s in r.split()] for r in rows[1 + n:1 + n + t]], dtype=np.int64)
    bed = np.array([[int(s) for s in r.split()] for r in rows[1 + n + t:1 + n + t + e]],
                   dtype=np.int64)
    mesh = TriMesh(nodes=nodes, triangles=tris, boundary_edges=bed,
                   boundary_nodes=np.sort(bed[:, 0]), h=0.0)
    object.__setattr__(mesh, "h", float(mesh.diameters().max()))
    return mesh

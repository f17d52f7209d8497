"""Quasi-uniform meshes of the unit disk.

Run: python demos/01_disk_meshes.py
"""
# %% Build the refinement sequence used by the convergence studies
import numpy as np

from bssplit.mesh import build_disk_mesh, refine_sequence

meshes = refine_sequence(0.4, 5)
for k, m in enumerate(meshes, start=1):
    print(f"level {k}: h={m.h:.3f}  nodes={m.n_nodes:4d}  boundary={m.n_boundary:3d}  "
          f"quality={m.quality():.2f}  area deficit={np.pi - m.areas().sum():.2e}")

# %% The boundary is a closed counterclockwise polygon inscribed in the circle
m = build_disk_mesh(0.3)
cycle = m.boundary_cycle()
angles = np.unwrap(np.arctan2(m.nodes[cycle, 1], m.nodes[cycle, 0]))
print("boundary angles increase:", bool(np.all(np.diff(angles) > 0)))
print("max | |x| - 1 | on boundary:", np.abs(np.linalg.norm(m.nodes[cycle], axis=1) - 1).max())

# %% Optional picture
try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4, 4))
    ax.triplot(m.nodes[:, 0], m.nodes[:, 1], m.triangles, lw=0.6)
    ax.set_aspect("equal")
    fig.savefig("disk_mesh.svg")
    print("wrote disk_mesh.svg")
except ImportError:
    pass

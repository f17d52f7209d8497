"""Bulk and surface P1 matrices, the discrete normal derivative, and harmonic extension.

Run: python demos/02_bulk_surface_fem.py
"""
# %%
import numpy as np

from bssplit import assemble, build_dirichlet, build_disk_mesh, extend

mesh = build_disk_mesh(0.2)
fem = assemble(mesh)
n = fem.n_surf
print(f"sum of bulk masses   {fem.mass_bulk.sum():.6f}   (pi = {np.pi:.6f})")
print(f"sum of surface masses {fem.mass_surf.sum():.6f}  (2N sin(pi/N) = {2 * n * np.sin(np.pi / n):.6f})")

# %% Stiffness matrices annihilate constants
print("|A_bulk 1|_inf =", np.abs(fem.stiff_bulk @ np.ones(fem.n_bulk)).max())
print("|A_surf 1|_inf =", np.abs(fem.stiff_surf @ np.ones(fem.n_surf)).max())

# %% Edge-flux normal derivative of u = x1^2 x2^2, whose exact value on the circle is 4u
x = mesh.nodes
u = x[:, 0] ** 2 * x[:, 1] ** 2
dn = (fem.neumann_mat @ u) / fem.mass_surf
print("edge-flux du/dn error:", np.abs(dn - 4 * u[fem.trace_map]).max())

# %% Harmonic extension reproduces linear functions exactly
op = build_dirichlet(fem)
lin = 0.5 + x[:, 0] - 2 * x[:, 1]
print("extension error for a linear function:", np.abs(extend(op, lin[fem.trace_map]) - lin).max())
theta = np.arctan2(x[fem.trace_map, 1], x[fem.trace_map, 0])
w = extend(op, np.cos(2 * theta))
print("extension of cos(2 theta) at the centre:", w[np.argmin(np.linalg.norm(x, axis=1))])

import numpy as np
import pytest
import sympy

from bssplit.fem import assemble
from bssplit.mesh import build_disk_mesh, refine_sequence
from bssplit.problems import (
    PROBLEMS,
    NodalForcing,
    exact_solution,
    exact_surface,
    get_problem,
    interpolate_exact,
    normal_derivative_exact,
    rho1,
    rho2,
)

x1, x2, t, r, th = sympy.symbols("x1 x2 t r theta", real=True)
U = sympy.exp(-t) * x1 ** 2 * x2 ** 2
POLAR = {x1: r * sympy.cos(th), x2: r * sympy.sin(th)}


def symbolic_forcing(name):
    """Inhomogeneities derived from the PDEs by symbolic differentiation."""
    mixing = name.endswith("mixing")
    f1 = U ** 2 if mixing else sympy.Integer(0)
    r1 = sympy.diff(U, t) - sympy.diff(U, x1, 2) - sympy.diff(U, x2, 2) - f1
    u_polar = U.subs(POLAR)
    v = u_polar.subs(r, 1)
    f2 = v * v if mixing else -v ** 3 + v
    if name.startswith("dynbc"):
        f2 = f2 - sympy.diff(u_polar, r).subs(r, 1)
    r2 = sympy.diff(v, t) - sympy.diff(v, th, 2) - f2
    return (sympy.lambdify((x1, x2, t), r1, "numpy"), sympy.lambdify((th, t), r2, "numpy"))


@pytest.fixture(scope="module")
def samples():
    rng = np.random.default_rng(7)
    rad = np.sqrt(rng.uniform(0, 1, 100))
    ang = rng.uniform(0, 2 * np.pi, 100)
    return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)]), rng.uniform(0, 1, 100), ang


def test_exact_solution_values():
    assert exact_solution(np.array([0.0, 0.0]), 0.3) == 0.0
    assert exact_solution(np.array([np.sqrt(0.5), np.sqrt(0.5)]), 0.0) == pytest.approx(0.25)
    assert exact_solution(np.array([1.0, 0.0]), 0.7) == 0.0


def test_compatibility_on_circle(samples):
    _, ts, ang = samples
    pts = np.column_stack([np.cos(ang), np.sin(ang)])
    np.testing.assert_allclose(exact_surface(ang, ts), exact_solution(pts, ts), atol=1e-15)


@pytest.mark.parametrize("name", PROBLEMS)
def test_forcing_matches_symbolic_derivation(name, samples):
    pts, ts, ang = samples
    p = get_problem(name)
    r1_sym, r2_sym = symbolic_forcing(name)
    np.testing.assert_allclose(p.rho1(pts, ts), r1_sym(pts[:, 0], pts[:, 1], ts), atol=1e-12)
    np.testing.assert_allclose(p.rho2(ang, ts), r2_sym(ang, ts), atol=1e-12)


@pytest.mark.parametrize("name", PROBLEMS)
def test_manufactured_residuals_vanish(name, samples):
    pts, ts, ang = samples
    p = get_problem(name)
    u = exact_solution(pts, ts)
    lap = 2 * np.exp(-ts) * (pts[:, 0] ** 2 + pts[:, 1] ** 2)
    f1, _ = p.nonlinearity(u, u, np.zeros_like(u))
    assert np.max(np.abs(-u - lap - f1 - rho1(pts, ts, p))) <= 1e-12
    v = exact_surface(ang, ts)
    lb = 2 * np.exp(-ts) * np.cos(4 * ang)
    _, f2 = p.nonlinearity(v, v, normal_derivative_exact(ang, ts))
    assert np.max(np.abs(-v - lb - f2 - rho2(ang, ts, p))) <= 1e-12


def test_rho1_examples():
    assert get_problem("mixing").rho1(np.array([0.0, 0.0]), 0.5) == 0.0
    assert get_problem("allen-cahn").rho1(np.array([1.0, 0.0]), 0.0) == pytest.approx(-2.0)


def test_rho2_allen_cahn_example():
    # v = 1/4, Lap_G v = -2, F2 = -1/64 + 1/4: rho2 = -1/4 + 2 - 15/64
    assert get_problem("allen-cahn").rho2(np.pi / 4, 0.0) == pytest.approx(1.515625, abs=1e-14)


def test_normal_derivative_example():
    assert normal_derivative_exact(np.pi / 4, 0.0) == pytest.approx(1.0)


def test_normal_derivative_by_finite_differences():
    ang = np.linspace(0, 2 * np.pi, 20, endpoint=False)
    d = 1e-6
    out = np.column_stack([np.cos(ang), np.sin(ang)])
    fd = (exact_solution(out * (1 + d), 0.4) - exact_solution(out * (1 - d), 0.4)) / (2 * d)
    np.testing.assert_allclose(fd, normal_derivative_exact(ang, 0.4), atol=1e-6)


def test_nonlinearity_examples():
    ac, mix = get_problem("allen-cahn"), get_problem("mixing")
    assert ac.nonlinearity(0.3, 1.0)[1] == 0.0
    assert ac.nonlinearity(0.3, 2.0)[1] == -6.0
    assert mix.nonlinearity(3.0, 2.0) == (9.0, 6.0)
    assert ac.nonlinearity(5.0, 2.0)[0] == 0.0


def test_dynbc_requires_normal_derivative():
    p = get_problem("dynbc-allen-cahn")
    with pytest.raises(ValueError):
        p.nonlinearity(1.0, 2.0)
    assert p.nonlinearity(1.0, 2.0, 0.5)[1] == -6.5


def test_unknown_problem():
    with pytest.raises(ValueError):
        get_problem("burgers")


def test_interpolate_exact_consistent():
    mesh = build_disk_mesh(0.4)
    fem = assemble(mesh)
    u, v = interpolate_exact(get_problem("mixing"), mesh, fem, 0.2)
    assert np.array_equal(u[fem.trace_map], v)


@pytest.mark.parametrize("kind", ["variational", "edge-flux"])
def test_discrete_neumann_converges(kind):
    p = get_problem("dynbc-allen-cahn")
    errs = []
    for mesh in refine_sequence(0.4, 4):
        fem = assemble(mesh)
        u, v = interpolate_exact(p, mesh, fem, 0.0)
        dn = NodalForcing(p, mesh, fem, neumann=kind).neumann(0.0, u, v)
        errs.append(np.max(np.abs(dn - 4 * v)))
    assert errs[-1] < errs[0]


def test_variational_neumann_beats_edge_flux():
    p = get_problem("dynbc-mixing")
    mesh = build_disk_mesh(0.15)
    fem = assemble(mesh)
    u, v = interpolate_exact(p, mesh, fem, 0.0)
    err = {k: np.max(np.abs(NodalForcing(p, mesh, fem, neumann=k).neumann(0.0, u, v) - 4 * v))
           for k in ("variational", "edge-flux")}
    assert err["variational"] < 0.5 * err["edge-flux"]


def test_forcing_is_mass_transformed_load():
    p = get_problem("allen-cahn")
    mesh = build_disk_mesh(0.4)
    fem = assemble(mesh)
    rhs = NodalForcing(p, mesh, fem)
    zero_u, zero_v = np.zeros(fem.n_bulk), np.zeros(fem.n_surf)
    g1, g2 = rhs(0.0, zero_u, zero_v)
    # integral of rho1 over the polygon equals sum(mass * g1)
    assert fem.mass_bulk @ g1 == pytest.approx(
        np.sum(rhs._bulk_quad.weights * p.rho1(rhs._bulk_quad.points, 0.0)), rel=1e-12)
    assert g2.shape == (fem.n_surf,)


def test_unknown_neumann_kind():
    mesh = build_disk_mesh(0.5)
    with pytest.raises(ValueError):
        NodalForcing(get_problem("dynbc-mixing"), mesh, assemble(mesh), neumann="spectral")

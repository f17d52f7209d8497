import numpy as np
import pytest
import scipy.linalg as sla

from bssplit import oracle
from bssplit.dirichlet import extend
from bssplit.fem import assemble
from bssplit.harness import fitted_slope
from bssplit.splitting import (
    SplitState,
    StepperConfig,
    build_transformed,
    integrate,
    lie_step,
    semigroup_S,
    semigroup_T0,
)


@pytest.fixture(scope="module")
def tiny(ring_mesh):
    mesh = ring_mesh(3)
    fem = assemble(mesh)
    return mesh, fem, build_transformed(fem), oracle.from_mesh(mesh)


def random_state(rng, fem):
    u = rng.standard_normal(fem.n_bulk)
    return u, u[fem.trace_map].copy()


def test_surface_generator_kills_constants(tiny):
    _, fem, ops, _ = tiny
    assert np.max(np.abs(ops.a_surf @ np.ones(fem.n_surf))) <= 1e-10


def test_T0_at_zero_is_projection(tiny, rng):
    _, fem, ops, _ = tiny
    w = rng.standard_normal(fem.n_bulk)
    out = semigroup_T0(ops, 0.0, w)
    assert np.array_equal(out[ops.interior], w[ops.interior])
    assert not np.any(out[fem.trace_map])


def test_T0_of_zero(tiny):
    _, fem, ops, _ = tiny
    assert not np.any(semigroup_T0(ops, 0.3, np.zeros(fem.n_bulk)))


def test_T0_eigenvector_vs_dense(tiny):
    _, fem, ops, fw = tiny
    lam, vec = np.linalg.eig(fw.A0)
    k = np.argmax(lam.real)  # slowest Dirichlet mode
    w = np.zeros(fem.n_bulk)
    w[ops.interior] = vec[:, k].real
    ref = fw.T0(0.4) @ w
    np.testing.assert_allclose(semigroup_T0(ops, 0.4, w), ref, atol=1e-8)
    np.testing.assert_allclose(ref[ops.interior], np.exp(0.4 * lam[k].real) * w[ops.interior],
                               atol=1e-10)


def test_T0_ignores_boundary_entries(tiny, rng):
    _, fem, ops, _ = tiny
    w = rng.standard_normal(fem.n_bulk)
    w2 = w.copy()
    w2[fem.trace_map] = 100.0
    assert np.array_equal(semigroup_T0(ops, 0.2, w), semigroup_T0(ops, 0.2, w2))


def test_S_constants_and_zero_time(tiny, rng):
    _, fem, ops, _ = tiny
    np.testing.assert_allclose(semigroup_S(ops, 0.7, np.full(fem.n_surf, 3.0)), 3.0, atol=1e-12)
    y = rng.standard_normal(fem.n_surf)
    assert np.array_equal(semigroup_S(ops, 0.0, y), y)


def test_S_cos4_vs_dense(tiny):
    mesh, fem, ops, fw = tiny
    theta = np.arctan2(mesh.nodes[fem.trace_map, 1], mesh.nodes[fem.trace_map, 0])
    y = np.cos(4 * theta)
    np.testing.assert_allclose(semigroup_S(ops, 0.3, y), fw.S(0.3) @ y, atol=1e-8)


def test_zero_state_stays_zero(tiny):
    _, fem, ops, _ = tiny
    s = lie_step(SplitState(0.0, np.zeros(fem.n_bulk), np.zeros(fem.n_surf)),
                 StepperConfig(tau=0.1, t_max=1.0), ops)
    assert not np.any(s.u) and not np.any(s.v)
    assert s.t == pytest.approx(0.1)


@pytest.mark.parametrize("tau", [0.01, 0.1, 0.5])
def test_linear_step_matches_block_operator(tiny, rng, tau):
    _, fem, ops, fw = tiny
    u, v = random_state(rng, fem)
    s = lie_step(SplitState(0.0, u, v), StepperConfig(tau=tau, t_max=1.0), ops)
    ref = fw.split_T(tau) @ np.concatenate([u, v])
    np.testing.assert_allclose(np.concatenate([s.u, s.v]), ref, atol=1e-8)


def test_k_steps_match_powers(tiny, rng):
    _, fem, ops, fw = tiny
    u, v = random_state(rng, fem)
    tau, k = 0.05, 12
    traj = integrate(u, v, StepperConfig(tau=tau, t_max=k * tau), ops)
    ref = np.linalg.matrix_power(fw.split_T(tau), k) @ np.concatenate([u, v])
    np.testing.assert_allclose(np.concatenate([traj[-1].u, traj[-1].v]), ref, atol=k * 1e-8)


def test_constant_surface_data_reduction(tiny, rng):
    _, fem, ops, _ = tiny
    u = rng.standard_normal(fem.n_bulk)
    v = np.full(fem.n_surf, 0.7)
    u[fem.trace_map] = v
    tau = 0.1
    s = lie_step(SplitState(0.0, u, v), StepperConfig(tau=tau, t_max=1.0), ops)
    ext = extend(ops.dirichlet, v)
    expected = semigroup_T0(ops, tau, u - ext) + ext
    np.testing.assert_allclose(s.u, expected, atol=1e-10)


def test_forcing_enters_explicitly(tiny, rng):
    _, fem, ops, fw = tiny
    u, v = random_state(rng, fem)
    g1, g2 = rng.standard_normal(fem.n_bulk), rng.standard_normal(fem.n_surf)
    tau = 0.1
    s = lie_step(SplitState(0.0, u, v),
                 StepperConfig(tau=tau, t_max=1.0, rhs=lambda t, a, b: (g1, g2)), ops)
    ref = fw.split_T(tau) @ np.concatenate([u + tau * g1, v + tau * g2])
    np.testing.assert_allclose(np.concatenate([s.u, s.v]), ref, atol=1e-8)


def test_constraint_bit_exact(tiny, rng):
    _, fem, ops, _ = tiny
    u, v = random_state(rng, fem)
    rhs = lambda t, a, b: (np.sin(a), b ** 2 - a[fem.trace_map])
    for st in integrate(u, v, StepperConfig(tau=0.05, t_max=1.0, rhs=rhs), ops):
        assert np.array_equal(st.u[fem.trace_map], st.v)


def test_integrate_t_max_zero(tiny, rng):
    _, fem, ops, _ = tiny
    u, v = random_state(rng, fem)
    traj = integrate(u, v, StepperConfig(tau=0.1, t_max=0.0), ops)
    assert len(traj) == 1 and np.array_equal(traj[0].u, u)


def test_integrate_single_step(tiny, rng):
    _, fem, ops, _ = tiny
    u, v = random_state(rng, fem)
    traj = integrate(u, v, StepperConfig(tau=0.3, t_max=0.3), ops)
    assert len(traj) == 2 and traj[-1].t == 0.3


def test_integrate_times_are_reanchored(tiny, rng):
    _, fem, ops, _ = tiny
    u, v = random_state(rng, fem)
    traj = integrate(u, v, StepperConfig(tau=0.1, t_max=1.0), ops, t0=2.0)
    assert [st.t for st in traj] == [2.0 + n * 0.1 for n in range(11)]


def test_integrate_rejects_inconsistent_data(tiny, rng):
    _, fem, ops, _ = tiny
    u, v = random_state(rng, fem)
    v[0] += 1e-15 + abs(v[0]) * 1e-15
    with pytest.raises(ValueError):
        integrate(u, v, StepperConfig(tau=0.1, t_max=1.0), ops)


@pytest.mark.parametrize("tau", [0.0, -0.1])
def test_config_rejects_tau(tau):
    with pytest.raises(ValueError):
        StepperConfig(tau=tau, t_max=1.0)


def test_linear_global_error_first_order(ring_mesh):
    mesh = ring_mesh(2)
    fem = assemble(mesh)
    ops, fw = build_transformed(fem), oracle.from_mesh(mesh)
    u0 = mesh.nodes[:, 0] ** 2 * mesh.nodes[:, 1] ** 2
    v0 = u0[fem.trace_map].copy()
    taus = 0.2 * 2.0 ** -np.arange(7)
    errs = []
    for tau in taus:
        traj = integrate(u0, v0, StepperConfig(tau=tau, t_max=1.0), ops)
        errs.append(max(np.linalg.norm(np.concatenate([st.u, st.v])
                                       - fw.exact_T(st.t) @ np.concatenate([u0, v0]))
                        for st in traj))
    errs = np.array(errs)
    assert fitted_slope(taus[-4:], errs[-4:]) >= 0.9
    bound = errs / (taus * np.abs(np.log(taus)))
    assert np.all(np.diff(bound[-4:]) < 0)


def test_unconditional_stability(tiny, rng):
    _, fem, ops, _ = tiny
    u, v = random_state(rng, fem)
    n0 = np.linalg.norm(np.concatenate([u, v]))
    for tau in (1.0, 0.25, 0.01):
        traj = integrate(u, v, StepperConfig(tau=tau, t_max=2.0), ops)
        norms = [np.linalg.norm(np.concatenate([s.u, s.v])) for s in traj]
        n = np.arange(1, len(norms) + 1)
        assert np.all(np.asarray(norms) <= 5 * (1 + np.log(n)) * n0)

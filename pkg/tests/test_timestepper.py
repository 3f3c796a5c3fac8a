import numpy as np
import pytest
import scipy.linalg as la

from pmlwave.assembly import GaussianPulse, assemble_all, constrain_operators, l2_project
from pmlwave.errors import ConfigError, NumericalError
from pmlwave.mesh import build_cartesian_mesh, homogeneous_material
from pmlwave.pml import PmlConfig
from pmlwave.quadrature import tensor_basis_tables
from pmlwave.timestepper import State, WaveStepper, energy, energy_matrices, run


def small_ops(damped=True, p=2, h=0.25, r=-1.0):
    mesh = build_cartesian_mesh((0.0, 1.0, 0.0, 1.0), h)
    basis = tensor_basis_tables(p)
    pml = PmlConfig(delta=0.5, x_inner=0.5, y_inner=0.5, d0_x=3.0, d0_y=2.0) if damped else None
    return assemble_all(mesh, basis, homogeneous_material(), pml, r=r)


def smooth_state(ops, seed=0):
    mesh, basis = ops.mesh, ops.basis

    def bump(x, y):
        return np.sin(np.pi * x) * np.sin(np.pi * y)

    def bump2(x, y):
        return np.sin(2 * np.pi * x) * np.sin(np.pi * y)

    u = l2_project(mesh, basis, ops.dof_u, bump)
    v = 0.3 * l2_project(mesh, basis, ops.dof_u, bump2)
    st = State(u=u, v=v, phi_x=np.zeros(ops.n_phi), phi_y=np.zeros(ops.n_phi), t=0.0)
    if ops.dirichlet is not None:
        st.u[ops.dirichlet] = 0.0
        st.v[ops.dirichlet] = 0.0
    return st


def test_zero_state_stays_zero_without_forcing():
    ops = small_ops()
    res = run(ops, None, 0.01, 0.05)
    assert np.all(res.final_state.u == 0.0)
    assert np.all(res.final_state.phi_x == 0.0)


def test_step_is_linear():
    ops = small_ops()
    stepper = WaveStepper(ops)
    st = smooth_state(ops)
    a = stepper.rk4_step(st.scaled(2.5), 0.01)
    b = stepper.rk4_step(st, 0.01).scaled(2.5)
    assert np.max(np.abs(a.u - b.u)) <= 1e-12
    assert np.max(np.abs(a.v - b.v)) <= 1e-12
    assert np.max(np.abs(a.phi_x - b.phi_x)) <= 1e-12


def test_rhs_matches_dense_solve():
    ops = small_ops()
    stepper = WaveStepper(ops)
    st = smooth_state(ops)
    st.phi_x = np.sin(np.arange(ops.n_phi))
    st.phi_y = np.cos(np.arange(ops.n_phi))
    du, dv, dpx, dpy = stepper.rhs(st)

    c = constrain_operators(ops)
    r = -(c.K @ st.u) - c.M_d1 @ st.v - c.M_d0 @ st.u \
        - c.B_x @ st.phi_x - c.B_y @ st.phi_y
    dv_ref = np.linalg.solve(c.M_u.toarray(), r)
    Mp = ops.jac * ops.M_phi_local
    rx = (c.G_x @ st.u - c.M_phid_x @ st.phi_x).reshape(-1, ops.basis.n_loc)
    dpx_ref = np.linalg.solve(Mp, rx.T).T.ravel()
    assert np.array_equal(du, st.v)
    assert np.max(np.abs(dv - dv_ref)) <= 1e-10
    assert np.max(np.abs(dpx - dpx_ref)) <= 1e-10
    assert dpy.shape == dpx.shape


def test_rk4_self_convergence_is_fourth_order():
    # Step sizes all well inside the stability region so the measured rate
    # reflects the local truncation error, not marginal stability.
    ops = small_ops(p=1)
    st0 = smooth_state(ops)
    T = 0.4
    finals = {}
    for dt in (0.04, 0.02, 0.005):
        res = run(ops, None, dt, T, initial=State(st0.u.copy(), st0.v.copy(),
                                                  st0.phi_x.copy(), st0.phi_y.copy(), 0.0))
        finals[dt] = res.final_state.u.copy()
    e1 = np.max(np.abs(finals[0.04] - finals[0.005]))
    e2 = np.max(np.abs(finals[0.02] - finals[0.005]))
    order = np.log2(e1 / e2)
    assert 3.4 <= order <= 4.8, f"observed order {order:.2f}"


def test_energy_quadratic_scaling():
    ops = small_ops(damped=False)
    M, K = energy_matrices(ops)
    st = smooth_state(ops)
    e1 = energy(st, M, K)
    e4 = energy(st.scaled(2.0), M, K)
    assert e4 == pytest.approx(4.0 * e1, rel=1e-12)
    assert e1 > 0.0


def test_damped_run_dissipates_energy():
    ops = small_ops(damped=True)
    st0 = smooth_state(ops)
    M, K = energy_matrices(ops)
    e0 = energy(st0, M, K)
    res = run(ops, None, 0.01, 2.0, initial=st0, energy_stride=50)
    e_end = energy(res.final_state, M, K)
    assert e_end < 0.5 * e0  # interior layer drains the standing wave quickly


def test_snapshot_times_must_divide():
    ops = small_ops(damped=False)
    with pytest.raises(ConfigError):
        run(ops, None, 0.01, 0.1, snapshot_times=(0.015,))
    res = run(ops, GaussianPulse(t0=0.02, tau=0.01), 0.01, 0.1, snapshot_times=(0.05,))
    assert len(res.snapshots) == 1
    assert res.snapshots[0][0] == pytest.approx(0.05)


def test_run_argument_validation():
    ops = small_ops(damped=False)
    with pytest.raises(ValueError):
        run(ops, None, -0.01, 1.0)
    with pytest.raises(ValueError):
        WaveStepper(ops).rk4_step(State.zero(ops), 0.0)


def test_unstable_step_raises():
    ops = small_ops(damped=False)
    st = smooth_state(ops)
    with pytest.warns(RuntimeWarning):
        with pytest.raises(NumericalError):
            with np.errstate(over="ignore", invalid="ignore"):
                run(ops, None, 5.0, 500.0, initial=st)


def test_recorders_shapes():
    ops = small_ops(damped=False)
    watch = np.array([0, 1, 2])
    res = run(ops, GaussianPulse(center=(0.5, 0.5), t0=0.05, tau=0.02, sigma=0.2),
              0.01, 0.1, watch_nodes=watch, record_nodes=np.array([5, 6]),
              energy_stride=5)
    assert res.times.shape == (11,)
    assert res.amplitudes.shape == (11,)
    assert res.node_values.shape == (11, 2)
    assert [s.t for s in res.samples] == pytest.approx([0.0, 0.05, 0.1])

"""Classical RK4 time integration of the semi-discrete damped wave system.

Each right-hand-side evaluation solves the continuous mass by warm-started
CG (relative residual 1e-12) and the discontinuous mass exactly through one
Cholesky factorization of the shared element block. The time loop is
sequential by contract; dt is fixed for the whole run.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .assembly import (
    GaussianPulse,
    Operators,
    assemble_forcing_spatial,
    assemble_stiffness,
    assemble_weighted_mass,
    constrain_operators,
)
from .errors import ConfigError, NumericalError
from .mesh import elements_in_box
from .solvers import pcg


@dataclass
class State:
    """DOF vectors of the four evolved fields at time t."""

    u: np.ndarray
    v: np.ndarray
    phi_x: np.ndarray
    phi_y: np.ndarray
    t: float = 0.0

    @classmethod
    def zero(cls, ops: Operators, t: float = 0.0) -> "State":
        return cls(
            u=np.zeros(ops.n_u),
            v=np.zeros(ops.n_u),
            phi_x=np.zeros(ops.n_phi),
            phi_y=np.zeros(ops.n_phi),
            t=t,
        )

    def scaled(self, alpha: float) -> "State":
        return State(alpha * self.u, alpha * self.v,
                     alpha * self.phi_x, alpha * self.phi_y, self.t)


@dataclass
class EnergySample:
    t: float
    E: float
    max_amp: float


@dataclass
class RunResult:
    samples: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)   # (t, u.copy()) pairs
    times: np.ndarray | None = None
    node_values: np.ndarray | None = None           # recorded node history
    amplitudes: np.ndarray | None = None            # max |u| over watched nodes
    final_state: "State | None" = None


def energy_matrices(ops: Operators, box=None):
    """The (mass, stiffness) pair defining E(t): full domain or elements inside box."""
    mask = None if box is None else elements_in_box(ops.mesh, box).astype(float)
    M = assemble_weighted_mass(
        ops.mesh, ops.basis, ops.dof_u,
        lambda x, y: 1.0 / ops.material.kappa(x, y), element_mask=mask,
    )
    K = assemble_stiffness(
        ops.mesh, ops.basis, ops.dof_u,
        lambda x, y: 1.0 / ops.material.rho(x, y), element_mask=mask,
    )
    return M, K


def energy(state: State, M, K) -> float:
    """E = (v' M v + u' K u) / 2 for a precomputed matrix pair."""
    return 0.5 * (float(state.v @ (M @ state.v)) + float(state.u @ (K @ state.u)))


class WaveStepper:
    """Owns the constrained operators, factorizations, and CG warm starts."""

    def __init__(self, ops: Operators, forcing: GaussianPulse | None = None,
                 forcing_cutoff: float | None = None):
        self.ops = ops
        self.cops = constrain_operators(ops)
        self.forcing = forcing
        self.forcing_cutoff = forcing_cutoff
        self._inv_diag = 1.0 / self.cops.M_u.diagonal()
        self._phi_chol = la.cho_factor(ops.jac * ops.M_phi_local)
        self._warm = np.zeros(ops.n_u)
        self._nloc = ops.basis.n_loc
        if forcing is not None:
            f = assemble_forcing_spatial(ops.mesh, ops.basis, ops.material,
                                         ops.dof_u, forcing.spatial)
            if ops.dirichlet is not None:
                f[ops.dirichlet] = 0.0
            self._f_spatial = f
        else:
            self._f_spatial = None

    def _envelope(self, t: float) -> float:
        if self._f_spatial is None:
            return 0.0
        if self.forcing_cutoff is not None and t > self.forcing_cutoff:
            return 0.0
        return float(self.forcing.envelope(t))

    def rhs(self, state: State):
        """Time derivatives (du, dv, dphi_x, dphi_y) at state.t."""
        c = self.cops
        r = -(c.K @ state.u)
        if c.M_d1.nnz:
            r -= c.M_d1 @ state.v
        if c.M_d0.nnz:
            r -= c.M_d0 @ state.u
        if c.B_x.nnz:
            r -= c.B_x @ state.phi_x
        if c.B_y.nnz:
            r -= c.B_y @ state.phi_y
        if c.R_v is not None:
            r -= c.R_v @ state.v
            r -= c.R_theta @ state.u
        env = self._envelope(state.t)
        if env != 0.0:
            r += env * self._f_spatial
        dv, _ = pcg(c.M_u, r, x0=self._warm, rtol=1e-12, inv_diag=self._inv_diag)
        self._warm = dv

        if c.G_x.nnz or c.G_y.nnz or c.M_phid_x.nnz or c.M_phid_y.nnz:
            rx = c.G_x @ state.u - c.M_phid_x @ state.phi_x
            ry = c.G_y @ state.u - c.M_phid_y @ state.phi_y
            dpx = la.cho_solve(self._phi_chol, rx.reshape(-1, self._nloc).T).T.ravel()
            dpy = la.cho_solve(self._phi_chol, ry.reshape(-1, self._nloc).T).T.ravel()
        else:
            dpx = np.zeros_like(state.phi_x)
            dpy = np.zeros_like(state.phi_y)
        return state.v, dv, dpx, dpy

    def rk4_step(self, state: State, dt: float) -> State:
        """One classical four-stage step; Dirichlet entries re-zeroed afterwards."""
        if dt <= 0:
            raise ValueError(f"time step must be positive, got {dt}")
        t0 = state.t
        k1 = self.rhs(state)
        s2 = State(state.u + 0.5 * dt * k1[0], state.v + 0.5 * dt * k1[1],
                   state.phi_x + 0.5 * dt * k1[2], state.phi_y + 0.5 * dt * k1[3],
                   t0 + 0.5 * dt)
        k2 = self.rhs(s2)
        s3 = State(state.u + 0.5 * dt * k2[0], state.v + 0.5 * dt * k2[1],
                   state.phi_x + 0.5 * dt * k2[2], state.phi_y + 0.5 * dt * k2[3],
                   t0 + 0.5 * dt)
        k3 = self.rhs(s3)
        s4 = State(state.u + dt * k3[0], state.v + dt * k3[1],
                   state.phi_x + dt * k3[2], state.phi_y + dt * k3[3], t0 + dt)
        k4 = self.rhs(s4)
        c = dt / 6.0
        new = State(
            u=state.u + c * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            v=state.v + c * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
            phi_x=state.phi_x + c * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
            phi_y=state.phi_y + c * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]),
            t=t0 + dt,
        )
        if self.ops.dirichlet is not None:
            new.u[self.ops.dirichlet] = 0.0
            new.v[self.ops.dirichlet] = 0.0
        return new


def _cfl_check(ops: Operators, dt: float) -> None:
    # Heuristic only: explicit stages resolve waves crossing a node spacing
    # of roughly h/p^2; warn when dt strays past half of that.
    x = ops.dof_u.node_coords[:, 0]
    y = ops.dof_u.node_coords[:, 1]
    c_max = float(np.max(ops.material.wave_speed(x, y)))
    h = min(ops.mesh.hx, ops.mesh.hy)
    limit = 0.5 * h / (c_max * ops.basis.p**2)
    if dt > limit:
        warnings.warn(
            f"dt={dt} exceeds the heuristic stability guide {limit:.4g} "
            f"(h={h}, c_max={c_max}, p={ops.basis.p})",
            RuntimeWarning,
        )


def run(
    ops: Operators,
    forcing: GaussianPulse | None,
    dt: float,
    t_end: float,
    initial: State | None = None,
    energy_stride: int = 0,
    energy_box=None,
    watch_nodes=None,
    record_nodes=None,
    snapshot_times=(),
    forcing_cutoff: float | None = None,
) -> RunResult:
    """Fixed-step RK4 loop over ceil(t_end/dt) steps with recorders.

    energy_stride > 0 samples E(t) (over energy_box if given) plus the max
    amplitude over watch_nodes every that many steps. watch_nodes feeds the
    per-step amplitude series; record_nodes stores the full solution history
    at those DOF indices. Snapshot times must be multiples of dt.
    """
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    n_steps = math.ceil(t_end / dt - 1e-9)
    snap_steps = {}
    for ts in snapshot_times:
        k = round(ts / dt)
        if abs(k * dt - ts) > 1e-9:
            raise ConfigError(f"snapshot time {ts} is not a multiple of dt={dt}")
        snap_steps.setdefault(k, ts)
    _cfl_check(ops, dt)

    stepper = WaveStepper(ops, forcing, forcing_cutoff=forcing_cutoff)
    state = initial if initial is not None else State.zero(ops)
    if ops.dirichlet is not None:
        state.u[ops.dirichlet] = 0.0
        state.v[ops.dirichlet] = 0.0

    e_pair = energy_matrices(ops, box=energy_box) if energy_stride else None
    result = RunResult()
    if record_nodes is not None:
        record_nodes = np.asarray(record_nodes)
        result.node_values = np.empty((n_steps + 1, len(record_nodes)))
    if watch_nodes is not None:
        watch_nodes = np.asarray(watch_nodes)
        result.amplitudes = np.empty(n_steps + 1)
    result.times = np.arange(n_steps + 1) * dt

    def observe(k: int, st: State):
        if not np.all(np.isfinite(st.u)):
            raise NumericalError(f"solution became non-finite at t={st.t:.4f}")
        if record_nodes is not None:
            result.node_values[k] = st.u[record_nodes]
        if watch_nodes is not None:
            result.amplitudes[k] = float(np.max(np.abs(st.u[watch_nodes]))) if len(watch_nodes) else 0.0
        if energy_stride and (k % energy_stride == 0 or k == n_steps):
            amp = result.amplitudes[k] if watch_nodes is not None else float(np.max(np.abs(st.u)))
            result.samples.append(EnergySample(t=st.t, E=energy(st, *e_pair), max_amp=amp))
        if k in snap_steps:
            result.snapshots.append((snap_steps[k], st.u.copy()))

    observe(0, state)
    for k in range(1, n_steps + 1):
        state = stepper.rk4_step(state, dt)
        state.t = k * dt  # keep recorded times free of accumulation drift
        observe(k, state)
    result.final_state = state
    return result

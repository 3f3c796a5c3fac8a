"""Sparse operator assembly for the damped wave system.

All element integrals use the (p+1)^2 tensor Gauss-Legendre points, also
where coefficients (damping, jumping materials) are not polynomial; the
interpolation property of that rule is part of the method, so no
over-integration. Material and damping values are sampled at physical
quadrature points; interfaces align with element boundaries, so each
element only ever sees smooth data.

Both gradient terms of the pressure equation are integrated by parts, so
the continuous space carries -(1/rho grad u, grad v) - (phi, grad v) and the
auxiliary fields receive the damped gradient of u through a source term.
Integrating only the first term by parts is known to destabilize the
scheme; the coupling operators here must stay the exact transposes they
are (B_eta^T equals the unit-weight gradient coupling).
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .errors import NumericalError
from .mesh import DofMap, MaterialField, MeshQ, dof_map, physical_quad_points
from .pml import PmlConfig, damping, gamma_2d, upsilon_2d
from .quadrature import BasisQp

# Local DOFs on each element edge, in edge order bottom/right/top/left.
def _edge_locals(p: int):
    i = np.arange(p + 1)
    return [i, i * (p + 1) + p, p * (p + 1) + i, i * (p + 1)]


@dataclass(frozen=True)
class GaussianPulse:
    """Separable forcing: Gaussian bump in space times a Gaussian envelope in time."""

    amplitude: float = 1.0
    sigma: float = 0.25
    center: tuple = (0.0, 0.0)
    t0: float = 1.0
    tau: float = 0.25

    def spatial(self, x, y):
        cx, cy = self.center
        r2 = (np.asarray(x) - cx) ** 2 + (np.asarray(y) - cy) ** 2
        return self.amplitude * np.exp(-r2 / (2.0 * self.sigma**2))

    def envelope(self, t):
        return np.exp(-(((t - self.t0) / self.tau) ** 2))


@dataclass(frozen=True)
class Operators:
    """Assembled semi-discrete system.

    u-space (continuous) matrices: M_u (1/kappa mass), M_d1 ((dx+dy)/kappa),
    M_d0 (dx*dy/kappa), K (1/rho stiffness), and for -1 < r < 1 the boundary
    matrices R_v (on du/dt) and R_theta (on u). Couplings: B_eta maps the
    discontinuous space into u-test rows, G_eta the reverse with the
    (dy-dx, dx-dy) weights. The discontinuous mass is one dense local block
    shared by all elements (uniform mesh) scaled by the Jacobian jac;
    M_phid_eta are the damping-weighted block-diagonal masses.
    """

    mesh: MeshQ
    basis: BasisQp
    material: MaterialField
    pml_cfg: PmlConfig | None
    r: float
    dof_u: DofMap
    dof_phi: DofMap
    M_u: sp.csr_matrix
    M_d1: sp.csr_matrix
    M_d0: sp.csr_matrix
    K: sp.csr_matrix
    B_x: sp.csr_matrix
    B_y: sp.csr_matrix
    G_x: sp.csr_matrix
    G_y: sp.csr_matrix
    M_phi_local: np.ndarray
    M_phid_x: sp.csr_matrix
    M_phid_y: sp.csr_matrix
    R_v: sp.csr_matrix | None
    R_theta: sp.csr_matrix | None
    dirichlet: np.ndarray | None
    jac: float

    @property
    def n_u(self) -> int:
        return self.dof_u.n_dofs

    @property
    def n_phi(self) -> int:
        return self.dof_phi.n_dofs

    @property
    def has_damping(self) -> bool:
        return self.pml_cfg is not None and self.pml_cfg.enabled


def _scatter(rows_cell, cols_cell, blocks, shape) -> sp.csr_matrix:
    """Accumulate per-element dense blocks into CSR.

    Element traversal order is fixed by the caller, and duplicate summation
    happens in canonical (row, col) order, so the result is reproducible.
    """
    ne, m, n = blocks.shape
    rows = np.broadcast_to(rows_cell[:, :, None], (ne, m, n)).ravel()
    cols = np.broadcast_to(cols_cell[:, None, :], (ne, m, n)).ravel()
    A = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=shape).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    A.eliminate_zeros()
    return A


def _coef_at_quad(fn, mesh: MeshQ, basis: BasisQp) -> np.ndarray:
    X, Y = physical_quad_points(mesh, basis)
    return np.broadcast_to(np.asarray(fn(X, Y), dtype=float), X.shape)


def assemble_weighted_mass(
    mesh: MeshQ, basis: BasisQp, dofmap: DofMap, weight, element_mask=None
) -> sp.csr_matrix:
    """Mass matrix (weight * u, v)_h on the given space; weight is a callable (x, y)."""
    coef = _coef_at_quad(weight, mesh, basis)
    if element_mask is not None:
        coef = coef * element_mask[:, None]
    J = mesh.hx * mesh.hy / 4.0
    blocks = np.einsum("q,eq,mq,nq->emn", basis.w2d, coef, basis.val2d, basis.val2d) * J
    n = dofmap.n_dofs
    return _scatter(dofmap.cell_dofs, dofmap.cell_dofs, blocks, (n, n))


def assemble_stiffness(
    mesh: MeshQ,
    basis: BasisQp,
    dofmap: DofMap,
    weight,
    direction: str = "both",
    element_mask=None,
) -> sp.csr_matrix:
    """Stiffness (weight * grad u, grad v)_h, or a single directional part of it."""
    if direction not in ("both", "x", "y"):
        raise ValueError(f"direction must be 'both', 'x' or 'y', got {direction!r}")
    coef = _coef_at_quad(weight, mesh, basis)
    if element_mask is not None:
        coef = coef * element_mask[:, None]
    # Jacobian times squared reference-gradient scaling: J*(2/hx)^2 = hy/hx.
    blocks = 0.0
    if direction in ("both", "x"):
        blocks = blocks + (mesh.hy / mesh.hx) * np.einsum(
            "q,eq,mq,nq->emn", basis.w2d, coef, basis.dxi2d, basis.dxi2d
        )
    if direction in ("both", "y"):
        blocks = blocks + (mesh.hx / mesh.hy) * np.einsum(
            "q,eq,mq,nq->emn", basis.w2d, coef, basis.deta2d, basis.deta2d
        )
    n = dofmap.n_dofs
    return _scatter(dofmap.cell_dofs, dofmap.cell_dofs, blocks, (n, n))


def _assemble_coupling_b(mesh, basis, dof_u, dof_phi, axis: str) -> sp.csr_matrix:
    """B_eta[v-row, phi-col] = (phi, d v / d eta)_h; no material weight."""
    if axis == "x":
        dcont, scale = basis.dxi2d, mesh.hy / 2.0  # J*(2/hx)
    else:
        dcont, scale = basis.deta2d, mesh.hx / 2.0
    block = np.einsum("q,mq,nq->mn", basis.w2d, dcont, basis.val2d) * scale
    blocks = np.broadcast_to(block, (mesh.n_elem,) + block.shape)
    return _scatter(dof_u.cell_dofs, dof_phi.cell_dofs, blocks,
                    (dof_u.n_dofs, dof_phi.n_dofs))


def _assemble_coupling_g(mesh, basis, dof_u, dof_phi, coef, axis: str) -> sp.csr_matrix:
    """G_eta[p-row, u-col] = (coef * d u / d eta, p)_h with coef sampled per point."""
    if axis == "x":
        dcont, scale = basis.dxi2d, mesh.hy / 2.0
    else:
        dcont, scale = basis.deta2d, mesh.hx / 2.0
    blocks = np.einsum("q,eq,mq,nq->emn", basis.w2d, coef, basis.val2d, dcont) * scale
    return _scatter(dof_phi.cell_dofs, dof_u.cell_dofs, blocks,
                    (dof_phi.n_dofs, dof_u.n_dofs))


def _assemble_boundary(mesh, basis, dof_u, material, pml_cfg, r):
    """Boundary matrices for -1 < r < 1: R_v on du/dt and R_theta on u.

    Edge integrals use the same (p+1)-point 1D Gauss-Legendre rule as the
    interior. On horizontal edges the flux modification carries d_x, on
    vertical edges d_y.
    """
    fac = (1.0 - r) / (1.0 + r)
    p = basis.p
    locs = _edge_locals(p)
    q = basis.quad.nodes
    w = basis.quad.weights
    rows, cols, vals_v, vals_t = [], [], [], []
    for e, edge, n_x, n_y in mesh.boundary_edges:
        ox, oy = mesh.elem_origin[e]
        if edge in (0, 2):  # bottom/top: parametrized by x
            xs = ox + (q + 1.0) * (mesh.hx / 2.0)
            ys = np.full_like(xs, oy if edge == 0 else oy + mesh.hy)
            ds = mesh.hx / 2.0
            dval = damping("x", xs, pml_cfg) if pml_cfg is not None else np.zeros_like(xs)
        else:  # left/right: parametrized by y
            ys = oy + (q + 1.0) * (mesh.hy / 2.0)
            xs = np.full_like(ys, ox + mesh.hx if edge == 1 else ox)
            ds = mesh.hy / 2.0
            dval = damping("y", ys, pml_cfg) if pml_cfg is not None else np.zeros_like(ys)
        c = material.wave_speed(xs, ys)
        base = basis.val1d  # traces of the edge DOFs are the 1D cardinal functions
        blk_v = np.einsum("a,a,ma,na->mn", w, fac * c, base, base) * ds
        blk_t = np.einsum("a,a,ma,na->mn", w, fac * c * dval, base, base) * ds
        gdofs = dof_u.cell_dofs[e, locs[edge]]
        mm, nn = np.meshgrid(gdofs, gdofs, indexing="ij")
        rows.append(mm.ravel())
        cols.append(nn.ravel())
        vals_v.append(blk_v.ravel())
        vals_t.append(blk_t.ravel())
    n = dof_u.n_dofs
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)

    def build(vals):
        A = sp.coo_matrix((np.concatenate(vals), (rows, cols)), shape=(n, n)).tocsr()
        A.sum_duplicates()
        A.sort_indices()
        A.eliminate_zeros()
        return A

    return build(vals_v), build(vals_t)


def assemble_all(
    mesh: MeshQ,
    basis: BasisQp,
    material: MaterialField,
    pml_cfg: PmlConfig | None,
    r: float = -1.0,
) -> Operators:
    """Assemble every operator of the semi-discrete system.

    pml_cfg None means no damping anywhere. r = -1 records the Dirichlet
    DOF set for strong elimination; |r| = 1 produces no boundary matrices.
    """
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"reflection coefficient must lie in [-1, 1], got {r}")
    dof_u = dof_map(mesh, basis.p, "continuous", gll=basis.gll_nodes)
    dof_phi = dof_map(mesh, basis.p, "discontinuous", gll=basis.gll_nodes)

    X, Y = physical_quad_points(mesh, basis)
    kap = np.broadcast_to(np.asarray(material.kappa(X, Y), dtype=float), X.shape)
    rho = np.broadcast_to(np.asarray(material.rho(X, Y), dtype=float), X.shape)
    if np.any(kap <= 0) or np.any(rho <= 0):
        raise ValueError("material parameters must be positive at all quadrature points")
    if pml_cfg is not None:
        dx = np.broadcast_to(damping("x", X, pml_cfg), X.shape)
        dy = np.broadcast_to(damping("y", Y, pml_cfg), X.shape)
    else:
        dx = np.zeros_like(X)
        dy = np.zeros_like(X)
    gam_x, gam_y = gamma_2d(dx, dy)

    J = mesh.hx * mesh.hy / 4.0
    n_u = dof_u.n_dofs
    n_phi = dof_phi.n_dofs

    def mass_u(coef):
        blocks = np.einsum("q,eq,mq,nq->emn", basis.w2d, coef, basis.val2d, basis.val2d) * J
        return _scatter(dof_u.cell_dofs, dof_u.cell_dofs, blocks, (n_u, n_u))

    M_u = mass_u(1.0 / kap)
    M_d1 = mass_u((dx + dy) / kap)
    M_d0 = mass_u(upsilon_2d(dx, dy) / kap)
    K = assemble_stiffness(mesh, basis, dof_u, lambda x, y: 1.0 / material.rho(x, y))

    damped = pml_cfg is not None and pml_cfg.enabled
    if damped:
        B_x = _assemble_coupling_b(mesh, basis, dof_u, dof_phi, "x")
        B_y = _assemble_coupling_b(mesh, basis, dof_u, dof_phi, "y")
        G_x = _assemble_coupling_g(mesh, basis, dof_u, dof_phi, gam_x / rho, "x")
        G_y = _assemble_coupling_g(mesh, basis, dof_u, dof_phi, gam_y / rho, "y")
    else:
        # Without damping the auxiliary fields stay at zero and never feed
        # back; dropping the couplings makes that structural.
        B_x = sp.csr_matrix((n_u, n_phi))
        B_y = sp.csr_matrix((n_u, n_phi))
        G_x = sp.csr_matrix((n_phi, n_u))
        G_y = sp.csr_matrix((n_phi, n_u))

    M_phi_local = np.einsum("q,mq,nq->mn", basis.w2d, basis.val2d, basis.val2d)

    def mass_phid(coef):
        blocks = np.einsum("q,eq,mq,nq->emn", basis.w2d, coef, basis.val2d, basis.val2d) * J
        return _scatter(dof_phi.cell_dofs, dof_phi.cell_dofs, blocks, (n_phi, n_phi))

    M_phid_x = mass_phid(dx)
    M_phid_y = mass_phid(dy)

    dirichlet = None
    R_v = R_theta = None
    if r == -1.0:
        dirichlet = dof_u.boundary
    elif r < 1.0:
        R_v, R_theta = _assemble_boundary(mesh, basis, dof_u, material, pml_cfg, r)

    for name, A in (("M_u", M_u), ("K", K), ("B_x", B_x), ("G_x", G_x)):
        if not np.all(np.isfinite(A.data)):
            raise NumericalError(f"assembled operator {name} contains non-finite entries")

    return Operators(
        mesh=mesh, basis=basis, material=material, pml_cfg=pml_cfg, r=r,
        dof_u=dof_u, dof_phi=dof_phi,
        M_u=M_u, M_d1=M_d1, M_d0=M_d0, K=K,
        B_x=B_x, B_y=B_y, G_x=G_x, G_y=G_y,
        M_phi_local=M_phi_local, M_phid_x=M_phid_x, M_phid_y=M_phid_y,
        R_v=R_v, R_theta=R_theta, dirichlet=dirichlet, jac=J,
    )


def assemble_forcing_spatial(
    mesh: MeshQ, basis: BasisQp, material: MaterialField, dofmap: DofMap, spatial
) -> np.ndarray:
    """Load vector entries (spatial / kappa, v)_h for a spatial profile."""
    X, Y = physical_quad_points(mesh, basis)
    coef = np.broadcast_to(np.asarray(spatial(X, Y), dtype=float), X.shape)
    kap = np.broadcast_to(np.asarray(material.kappa(X, Y), dtype=float), X.shape)
    J = mesh.hx * mesh.hy / 4.0
    local = np.einsum("q,eq,mq->em", basis.w2d, coef / kap, basis.val2d) * J
    out = np.zeros(dofmap.n_dofs)
    np.add.at(out, dofmap.cell_dofs.ravel(), local.ravel())
    return out


def assemble_forcing(
    mesh: MeshQ,
    basis: BasisQp,
    material: MaterialField,
    dofmap: DofMap,
    pulse: GaussianPulse,
    t: float,
) -> np.ndarray:
    """Full load vector ((1/kappa) F(., t), v)_h for the separable pulse."""
    return pulse.envelope(t) * assemble_forcing_spatial(
        mesh, basis, material, dofmap, pulse.spatial
    )


def l2_project(mesh: MeshQ, basis: BasisQp, dofmap: DofMap, g) -> np.ndarray:
    """L2 projection of g onto the requested space: solve M x = (g, v)_h.

    Discontinuous spaces solve element blocks directly; the continuous
    unweighted mass is solved by preconditioned CG.
    """
    X, Y = physical_quad_points(mesh, basis)
    gq = np.broadcast_to(np.asarray(g(X, Y), dtype=float), X.shape)
    J = mesh.hx * mesh.hy / 4.0
    local = np.einsum("q,eq,mq->em", basis.w2d, gq, basis.val2d) * J
    M_loc = np.einsum("q,mq,nq->mn", basis.w2d, basis.val2d, basis.val2d) * J

    if dofmap.kind == "discontinuous":
        sol = np.linalg.solve(M_loc, local.T).T
        out = np.zeros(dofmap.n_dofs)
        out[dofmap.cell_dofs.ravel()] = sol.ravel()
        return out

    load = np.zeros(dofmap.n_dofs)
    np.add.at(load, dofmap.cell_dofs.ravel(), local.ravel())
    ones = np.ones_like
    M = assemble_weighted_mass(mesh, basis, dofmap, lambda x, y: ones(np.asarray(x, dtype=float)))
    from .solvers import pcg

    x, _ = pcg(M, load, rtol=1e-13)
    return x


def apply_dirichlet(ops: Operators, obj, diag: float = 1.0):
    """Constrain a vector or matrix to the recorded Dirichlet DOF set.

    Vectors of u-space length get boundary entries zeroed. Matrices get
    boundary rows and/or columns (whichever dimensions are u-sized) zeroed;
    square u-space matrices additionally receive `diag` on the constrained
    diagonal. Returns a new object.
    """
    if ops.dirichlet is None:
        raise ValueError("operators were not assembled with r = -1")
    bnd = ops.dirichlet
    n_u = ops.n_u
    if isinstance(obj, np.ndarray):
        out = obj.copy()
        if out.shape[0] != n_u:
            raise ValueError("vector length does not match the continuous space")
        out[bnd] = 0.0
        return out
    A = obj.tocsr(copy=True)
    mask_rows = A.shape[0] == n_u
    mask_cols = A.shape[1] == n_u
    if not mask_rows and not mask_cols:
        raise ValueError("matrix has no u-space dimension to constrain")
    keep = np.ones(n_u, dtype=bool)
    keep[bnd] = False
    if mask_rows:
        D = sp.diags(keep.astype(A.dtype), shape=(n_u, n_u), format="csr")
        A = D @ A
    if mask_cols:
        D = sp.diags(keep.astype(A.dtype), shape=(n_u, n_u), format="csr")
        A = A @ D
    if mask_rows and mask_cols and diag != 0.0:
        fill = np.zeros(n_u)
        fill[bnd] = diag
        A = A + sp.diags(fill, format="csr")
    A = A.tocsr()
    A.sum_duplicates()
    A.sort_indices()
    A.eliminate_zeros()
    return A


def constrain_operators(ops: Operators) -> Operators:
    """Apply strong Dirichlet elimination to every operator the stepper uses.

    M_u and K keep a unit diagonal on the boundary (solvability, SPD); the
    damping masses and couplings are plainly zeroed. G is untouched: its
    u-columns multiply a state whose boundary entries are pinned to zero.
    """
    if ops.dirichlet is None:
        return ops
    return replace(
        ops,
        M_u=apply_dirichlet(ops, ops.M_u, diag=1.0),
        K=apply_dirichlet(ops, ops.K, diag=1.0),
        M_d1=apply_dirichlet(ops, ops.M_d1, diag=0.0),
        M_d0=apply_dirichlet(ops, ops.M_d0, diag=0.0),
        B_x=apply_dirichlet(ops, ops.B_x),
        B_y=apply_dirichlet(ops, ops.B_y),
    )


def dump_matrices(ops: Operators, out_dir) -> list:
    """Write every assembled matrix in MatrixMarket coordinate format."""
    import os

    from scipy.io import mmwrite

    os.makedirs(out_dir, exist_ok=True)
    named = {
        "M_u": ops.M_u, "M_d1": ops.M_d1, "M_d0": ops.M_d0, "K": ops.K,
        "B_x": ops.B_x, "B_y": ops.B_y, "G_x": ops.G_x, "G_y": ops.G_y,
        "M_phid_x": ops.M_phid_x, "M_phid_y": ops.M_phid_y,
    }
    if ops.R_v is not None:
        named["R_v"] = ops.R_v
        named["R_theta"] = ops.R_theta
    written = []
    for name, A in named.items():
        path = os.path.join(out_dir, f"{name}.mtx")
        mmwrite(path, A)
        written.append(path)
    return written

"""1D Gauss rules and tensor-product Lagrange bases on the reference square.

Nodes are computed by Newton iteration with Chebyshev initial guesses, so
the module has no dependency beyond numpy. The (p+1)-point Gauss-Legendre
rule paired with Q_p is deliberate: with exactly (p+1)^2 points per element
the quadrature-point values determine a unique Q_p polynomial, and that
property is load-bearing for the discontinuous-space algebra downstream.
Do not swap in a finer rule here.
"""

from dataclasses import dataclass

import numpy as np

MAX_ORDER = 8          # basis order cap; higher orders raise conditioning questions
MAX_QUAD_POINTS = 16
_NEWTON_CAP = 100
_NEWTON_TOL = 1e-15


@dataclass(frozen=True)
class QuadRule1D:
    """Gauss-Legendre rule on [-1, 1]: n points, exact through degree 2n-1."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class BasisQp:
    """Tensor-product Lagrange basis of order p with its quadrature tables.

    1D Lagrange functions sit on the p+1 Gauss-Lobatto nodes; integration
    uses the (p+1)-point Gauss-Legendre rule. 2D indices are row-major with
    the xi index fastest: basis n = j*(p+1)+i <-> L_i(xi)*L_j(eta), and
    quadrature point q = b*(p+1)+a <-> (xi_a, eta_b).

    Tables:
      val1d[j, q]   L_j at 1D quadrature node q
      der1d[j, q]   L_j' at 1D quadrature node q
      val2d[n, q]   2D basis n at 2D quadrature point q
      dxi2d, deta2d reference-coordinate gradients at the 2D points
      w2d[q]        tensor quadrature weight
    """

    p: int
    gll_nodes: np.ndarray
    quad: QuadRule1D
    val1d: np.ndarray
    der1d: np.ndarray
    val2d: np.ndarray
    dxi2d: np.ndarray
    deta2d: np.ndarray
    w2d: np.ndarray

    @property
    def n_loc(self) -> int:
        """Local DOF count (p+1)^2."""
        return (self.p + 1) ** 2


def _legendre(n: int, x: np.ndarray):
    """Evaluate P_n and P_n' by the three-term recurrence.

    Returns (P_n(x), P_n'(x)); derivative via the standard identity
    (1-x^2) P_n'(x) = n*(P_{n-1}(x) - x*P_n(x)), with a separate branch
    for |x| = 1 where that identity degenerates.
    """
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p_cur = x.copy()
    for k in range(1, n):
        p_next = ((2 * k + 1) * x * p_cur - k * p_prev) / (k + 1)
        p_prev, p_cur = p_cur, p_next
    one_minus = 1.0 - x * x
    deriv = np.empty_like(x)
    interior = one_minus > 1e-14
    deriv[interior] = (
        n * (p_prev[interior] - x[interior] * p_cur[interior]) / one_minus[interior]
    )
    # At x = +-1: P_n'(+-1) = (+-1)^(n-1) * n*(n+1)/2.
    edge = ~interior
    deriv[edge] = np.sign(x[edge]) ** (n - 1) * n * (n + 1) / 2.0
    return p_cur, deriv


def gauss_legendre_rule(n: int) -> QuadRule1D:
    """Gauss-Legendre rule with n points on [-1, 1].

    Nodes are the roots of P_n found by Newton iteration from Chebyshev
    initial guesses; weights via 2 / ((1 - x^2) * P_n'(x)^2). The node set
    is symmetrized so rounding cannot break the +-x pairing.
    """
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUAD_POINTS:
        raise ValueError(f"quadrature point count must be in 1..{MAX_QUAD_POINTS}, got {n}")
    if n == 1:
        return QuadRule1D(nodes=np.zeros(1), weights=np.full(1, 2.0))

    k = np.arange(n)
    x = np.cos(np.pi * (k + 0.75) / (n + 0.5))  # Chebyshev-like guess, descending
    for _ in range(_NEWTON_CAP):
        val, der = _legendre(n, x)
        dx = val / der
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    val, der = _legendre(n, x)
    if np.max(np.abs(val)) > 1e-14:
        raise RuntimeError(f"Newton iteration for Gauss-Legendre nodes stalled at n={n}")
    x = np.sort(x)
    x = 0.5 * (x - x[::-1])  # enforce exact symmetry about 0
    _, der = _legendre(n, x)
    w = 2.0 / ((1.0 - x * x) * der * der)
    w = 0.5 * (w + w[::-1])
    return QuadRule1D(nodes=x, weights=w)


def gauss_lobatto_nodes(p: int) -> np.ndarray:
    """The p+1 Gauss-Lobatto nodes on [-1, 1]: +-1 and the roots of P_p'.

    Interior roots by Newton on P_p' (second derivative from the Legendre
    ODE), started from the Chebyshev-Lobatto points.
    """
    if not isinstance(p, (int, np.integer)) or not 1 <= p <= MAX_ORDER:
        raise ValueError(f"basis order must be in 1..{MAX_ORDER}, got {p}")
    if p == 1:
        return np.array([-1.0, 1.0])

    k = np.arange(1, p)
    x = np.cos(np.pi * k / p)  # Chebyshev-Lobatto interior points, descending
    for _ in range(_NEWTON_CAP):
        val, der = _legendre(p, x)
        # q = P_p', q' = P_p'' = (2x P_p' - p(p+1) P_p) / (1 - x^2)
        second = (2.0 * x * der - p * (p + 1) * val) / (1.0 - x * x)
        dx = der / second
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    _, der = _legendre(p, x)
    if np.max(np.abs(der)) > 1e-14:
        raise RuntimeError(f"Newton iteration for Gauss-Lobatto nodes stalled at p={p}")
    x = np.sort(x)
    x = 0.5 * (x - x[::-1])
    return np.concatenate(([-1.0], x, [1.0]))


def _check_nodes(nodes: np.ndarray) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=float)
    if len(np.unique(nodes)) != len(nodes):
        raise ValueError("interpolation nodes must be distinct")
    return nodes


def lagrange_eval(nodes, j: int, x):
    """Cardinal function L_j of the given nodes, evaluated at x (scalar or array)."""
    nodes = _check_nodes(nodes)
    if not 0 <= j < len(nodes):
        raise ValueError(f"index {j} out of range for {len(nodes)} nodes")
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    for k in range(len(nodes)):
        if k != j:
            out = out * (x - nodes[k]) / (nodes[j] - nodes[k])
    return out if out.ndim else float(out)


def lagrange_deriv(nodes, j: int, x):
    """Derivative L_j' at x, by the sum-over-omitted-node product formula."""
    nodes = _check_nodes(nodes)
    if not 0 <= j < len(nodes):
        raise ValueError(f"index {j} out of range for {len(nodes)} nodes")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for m in range(len(nodes)):
        if m == j:
            continue
        term = np.ones_like(x) / (nodes[j] - nodes[m])
        for k in range(len(nodes)):
            if k != j and k != m:
                term = term * (x - nodes[k]) / (nodes[j] - nodes[k])
        out = out + term
    return out if out.ndim else float(out)


def lagrange_values_at(nodes, x) -> np.ndarray:
    """Matrix V[j, i] = L_j(x_i) for all cardinal functions at all points x."""
    nodes = _check_nodes(nodes)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.array([lagrange_eval(nodes, j, x) for j in range(len(nodes))])


def lagrange_derivs_at(nodes, x) -> np.ndarray:
    """Matrix D[j, i] = L_j'(x_i)."""
    nodes = _check_nodes(nodes)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.array([lagrange_deriv(nodes, j, x) for j in range(len(nodes))])


def tensor_basis_tables(p: int) -> BasisQp:
    """Build the order-p basis with all tables precomputed.

    Assembly must never re-evaluate Lagrange products; everything needed at
    the (p+1)^2 quadrature points lives here.
    """
    if not isinstance(p, (int, np.integer)) or not 1 <= p <= MAX_ORDER:
        raise ValueError(f"basis order must be in 1..{MAX_ORDER}, got {p}")
    gll = gauss_lobatto_nodes(p)
    quad = gauss_legendre_rule(p + 1)
    val1d = lagrange_values_at(gll, quad.nodes)
    der1d = lagrange_derivs_at(gll, quad.nodes)
    # kron(A, B)[j*(p+1)+i, b*(p+1)+a] = A[j, b] * B[i, a]: y-factor slow, x fast.
    val2d = np.kron(val1d, val1d)
    dxi2d = np.kron(val1d, der1d)
    deta2d = np.kron(der1d, val1d)
    w2d = np.kron(quad.weights, quad.weights)
    return BasisQp(
        p=int(p),
        gll_nodes=gll,
        quad=quad,
        val1d=val1d,
        der1d=der1d,
        val2d=val2d,
        dxi2d=dxi2d,
        deta2d=deta2d,
        w2d=w2d,
    )

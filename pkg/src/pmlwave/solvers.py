"""Iterative solve for the SPD mass systems.

Hand-rolled preconditioned CG: the stepper needs warm starts, a fixed
relative-residual contract, and the achieved residual in failure reports,
which is less fragile than tracking third-party solver signatures.
"""

import numpy as np

from .errors import NumericalError


def pcg(A, b, x0=None, rtol: float = 1e-12, maxiter: int = 2000, inv_diag=None):
    """Solve A x = b for SPD A by Jacobi-preconditioned conjugate gradients.

    Stops when ||b - A x|| <= rtol * ||b||. Returns (x, achieved relative
    residual). inv_diag may carry the precomputed reciprocal diagonal.
    """
    b = np.asarray(b, dtype=float)
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return np.zeros_like(b), 0.0
    # An overflowing norm would make rtol*nb infinite and declare any
    # iterate converged; refuse data outside the representable range.
    if not np.isfinite(nb):
        raise NumericalError("CG right-hand side norm is not finite")
    if inv_diag is None:
        diag = A.diagonal()
        if np.any(diag <= 0):
            raise NumericalError("matrix diagonal is not positive; CG requires SPD")
        inv_diag = 1.0 / diag
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    tol = rtol * nb
    for _ in range(maxiter):
        if np.linalg.norm(r) <= tol:
            return x, np.linalg.norm(r) / nb
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    achieved = np.linalg.norm(b - A @ x) / nb
    if achieved <= rtol:
        return x, achieved
    raise NumericalError(
        f"CG failed to reach rtol={rtol:g} within {maxiter} iterations; "
        f"achieved relative residual {achieved:.3e}"
    )

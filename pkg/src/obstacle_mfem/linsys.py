"""Sparse direct solves for the saddle-point systems.

All systems are assembled in KKT form (equality constraints via Lagrange
multiplier rows, never penalties) and solved with a sparse LU
factorization.  Every solve asserts the relative residual.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularSystem(Exception):
    """Factorization breakdown or residual failure of a linear solve."""


def factor_solve(A, rhs, residual_tol=1e-10, label=""):
    """Solve the square sparse system A x = rhs by sparse LU.

    Raises SingularSystem on breakdown or when the relative residual
    exceeds residual_tol.
    """
    A = sp.csc_matrix(A)
    rhs = np.asarray(rhs, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != len(rhs):
        raise ValueError("system is not square: %s, rhs %d" % (A.shape, len(rhs)))
    # Ruiz equilibration: the assembled saddle-point blocks mix entries of
    # very different magnitude (mass rows ~ h^2, second-divergence rows
    # ~ 1/h^2); symmetric row/column scaling keeps the factorization
    # accurate on fine meshes.
    dr = np.ones(A.shape[0])
    dc = np.ones(A.shape[1])
    As = A.copy()
    for _ in range(3):
        rmax = np.maximum(abs(As).max(axis=1).toarray().ravel(), 1e-300)
        sr = 1.0 / np.sqrt(rmax)
        As = sp.diags(sr) @ As
        dr *= sr
        cmax = np.maximum(abs(As).max(axis=0).toarray().ravel(), 1e-300)
        sc = 1.0 / np.sqrt(cmax)
        As = As @ sp.diags(sc)
        dc *= sc
    As = sp.csc_matrix(As)
    try:
        lu = spla.splu(As, permc_spec="COLAMD")
        x = dc * lu.solve(dr * rhs)
    except RuntimeError as exc:
        raise SingularSystem("%s: %s" % (label or "solve", exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystem("%s: non-finite solution" % (label or "solve"))
    # normwise backward error ||Ax-b|| / (||A|| ||x|| + ||b||)
    norm_a = spla.norm(A, np.inf)

    def backward(x):
        denom = norm_a * np.linalg.norm(x, np.inf) + \
            np.linalg.norm(rhs, np.inf)
        return np.linalg.norm(A @ x - rhs, np.inf) / max(denom, 1e-300)

    res = backward(x)
    # a couple of iterative-refinement steps recover the last digits lost
    # to conditioning of the saddle-point factorization
    for _ in range(2):
        if res <= 0.01 * residual_tol:
            break
        x = x + dc * lu.solve(dr * (rhs - A @ x))
        res = backward(x)
    if res > residual_tol:
        raise SingularSystem(
            "%s: relative residual %.3e exceeds %.1e"
            % (label or "solve", res, residual_tol))
    return x


def export_matrix_market(A, path):
    """Debug export of a sparse matrix in matrix-market text form."""
    from scipy.io import mmwrite
    mmwrite(path, sp.coo_matrix(A))

"""Small dense linear algebra used across the package.

Matrices are plain ``numpy`` float arrays. ``vec`` is column stacking, so
``vec(A @ X @ B.T) == kron(B, A) @ vec(X)``.
"""

import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from ._validation import check_matrix, check_square, check_symmetric, check_vector
from .exceptions import DimensionMismatch, SingularMatrix

PIVOT_TOL = 1e-12


def solve_linear(A, b):
    """Solve ``A x = b`` by LU factorisation with partial pivoting.

    Raises
    ------
    SingularMatrix
        If a pivot has magnitude below 1e-12 after row exchanges.
    """
    A = check_square(A, "A")
    b = check_vector(b, "b", size=A.shape[0])
    with warnings.catch_warnings():
        # exact singularity is reported below as SingularMatrix
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.size and pivots.min() < PIVOT_TOL:
        raise SingularMatrix(f"pivot magnitude {pivots.min():.3g} below {PIVOT_TOL:g}")
    return lu_solve((lu, piv), b, check_finite=False)


def kron(A, B):
    return np.kron(check_matrix(A, "A"), check_matrix(B, "B"))


def vec(X):
    """Column-stacking vectorisation."""
    return np.asarray(X, dtype=float).reshape(-1, order="F")


def unvec(v, rows, cols):
    v = np.asarray(v, dtype=float)
    if v.size != rows * cols:
        raise DimensionMismatch(f"cannot reshape {v.size} entries to {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def min_eig_sym(S):
    """Smallest eigenvalue of a symmetric matrix."""
    S = check_symmetric(S, "S")
    return float(np.linalg.eigvalsh(0.5 * (S + S.T))[0])


def is_positive_definite(S, tol=1e-9):
    return min_eig_sym(S) > tol


def frobenius(A):
    return float(np.linalg.norm(np.asarray(A, dtype=float), "fro"))

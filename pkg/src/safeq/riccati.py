"""Model-based LQR ground truth: Lyapunov solver, Kleinman iteration, ideal weights."""

from dataclasses import dataclass, field

import numpy as np

from . import matlib
from ._validation import check_matrix, check_square, check_symmetric
from .exceptions import (
    DimensionMismatch,
    InvariantViolation,
    NoConvergence,
    NotStabilizable,
    SingularMatrix,
)

DEFINITE_TOL = 1e-9
STEP_TOL = 1e-12
RESIDUAL_TOL = 1e-8
MAX_ITER = 100


@dataclass(frozen=True)
class SystemModel:
    """Plant ``x' = A x + B u`` with quadratic cost weights ``M`` (state) and ``R`` (input)."""

    A: np.ndarray
    B: np.ndarray
    M: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A = check_square(self.A, "A")
        n = A.shape[0]
        B = check_matrix(self.B, "B")
        if B.shape[0] != n:
            raise DimensionMismatch(f"B must have {n} rows, got {B.shape[0]}")
        m = B.shape[1]
        M = check_symmetric(self.M, "M")
        R = check_symmetric(self.R, "R")
        if M.shape != (n, n) or R.shape != (m, m):
            raise DimensionMismatch("M must be n x n and R must be m x m")
        if matlib.min_eig_sym(M) < -DEFINITE_TOL:
            raise InvariantViolation("M positive semidefinite")
        if not matlib.is_positive_definite(R, DEFINITE_TOL):
            raise InvariantViolation("R positive definite")
        if not matlib.is_positive_definite(B.T @ B, DEFINITE_TOL):
            raise InvariantViolation("B full column rank")
        for name, value in (("A", A), ("B", B), ("M", M), ("R", R)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]


def benchmark_system():
    """The open-loop unstable second-order benchmark plant."""
    return SystemModel(
        A=[[0.0, 1.0], [1.6, 2.8]],
        B=[[0.0], [1.0]],
        M=np.eye(2),
        R=[[0.1]],
    )


@dataclass(frozen=True)
class RiccatiSolution:
    P: np.ndarray
    Wa: np.ndarray  # ideal actor weight, u* = Wa.T @ x
    Wc: np.ndarray  # ideal critic weight, Wc @ phi(X) = X.T Qbar X / 2
    Qbar: np.ndarray
    iterations: int = 0
    residual: float = field(default=np.nan)

    @property
    def gain(self):
        """Optimal feedback gain ``K`` with ``u* = -K x``."""
        return -self.Wa.T


def solve_lyapunov(F, Q):
    """Solve ``F.T P + P F + Q = 0`` through the Kronecker identity."""
    F = check_square(F, "F")
    Q = check_symmetric(Q, "Q")
    n = F.shape[0]
    if Q.shape != (n, n):
        raise DimensionMismatch("F and Q must have the same shape")
    eye = np.eye(n)
    L = matlib.kron(eye, F.T) + matlib.kron(F.T, eye)
    P = matlib.unvec(matlib.solve_linear(L, -matlib.vec(Q)), n, n)
    return 0.5 * (P + P.T)


def is_hurwitz(F):
    """Lyapunov test: ``F`` is Hurwitz iff ``F.T P + P F + I = 0`` has a PD solution."""
    F = check_square(F, "F")
    try:
        P = solve_lyapunov(F, np.eye(F.shape[0]))
    except SingularMatrix:
        return False
    return matlib.is_positive_definite(P, DEFINITE_TOL)


def stabilizing_initial_gain(sys):
    """Bass's method: a gain ``K0`` that makes ``A - B K0`` Hurwitz."""
    A, B = sys.A, sys.B
    n = sys.n
    if is_hurwitz(A):
        return np.zeros((sys.m, n))
    beta = matlib.frobenius(A) + 1.0
    shifted = A + beta * np.eye(n)
    # (A + bI) X + X (A + bI)^T = 2 B B^T
    X = solve_lyapunov(shifted.T, -2.0 * B @ B.T)
    try:
        K0 = np.column_stack([matlib.solve_linear(X, col) for col in B.T]).T  # B^T X^-1
    except SingularMatrix as exc:
        raise NotStabilizable("controllability Gramian is singular") from exc
    if not is_hurwitz(A - B @ K0):
        raise NotStabilizable("Bass gain failed the Lyapunov certificate")
    return K0


def are_residual(sys, P):
    A, B, M, R = sys.A, sys.B, sys.M, sys.R
    RinvBt = np.linalg.solve(R, B.T)
    return matlib.frobenius(A.T @ P + P @ A - P @ B @ RinvBt @ P + M)


def q_matrix(sys, P):
    """Block matrix of the quadratic Q-function for value ``x.T P x / 2``."""
    A, B, M, R = sys.A, sys.B, sys.M, sys.R
    Q11 = P @ A + A.T @ P + P + M
    Q12 = P @ B
    return np.block([[Q11, Q12], [Q12.T, R]])


def solve_care(sys, *, max_iter=MAX_ITER, K0=None):
    """Solve the continuous-time ARE by Kleinman-Newton iteration.

    Starting from a stabilising gain, alternate the policy-evaluation
    Lyapunov solve with the gain update ``K = R^-1 B^T P`` until the
    Frobenius step in ``P`` drops below 1e-12 (scaled by ``max(1, |P|)``).
    """
    from .qlearn import vech_weights

    A, B, M, R = sys.A, sys.B, sys.M, sys.R
    K = stabilizing_initial_gain(sys) if K0 is None else check_matrix(K0, "K0", (sys.m, sys.n))
    P_prev = None
    prev_step = np.inf
    for it in range(1, max_iter + 1):
        P = solve_lyapunov(A - B @ K, M + K.T @ R @ K)
        K = np.linalg.solve(R, B.T @ P)
        if P_prev is not None:
            step = matlib.frobenius(P - P_prev)
            if step <= STEP_TOL * max(1.0, matlib.frobenius(P)):
                break
            # near the solution Newton steps shrink quadratically; growth there is rounding noise
            if step >= prev_step and step <= 1e-8 * max(1.0, matlib.frobenius(P)):
                break
            prev_step = step
        P_prev = P
    else:
        raise NoConvergence(f"Kleinman iteration did not converge in {max_iter} steps")
    residual = are_residual(sys, P)
    if residual > RESIDUAL_TOL * max(1.0, matlib.frobenius(P)):
        raise NoConvergence(f"ARE residual {residual:.3g} exceeds tolerance")
    Qbar = q_matrix(sys, P)
    return RiccatiSolution(
        P=P,
        Wa=-K.T,
        Wc=vech_weights(Qbar),
        Qbar=Qbar,
        iterations=it,
        residual=residual,
    )

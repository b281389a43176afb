"""Safe control laws: the implementable certainty-equivalence law and the KKT optimum."""

from dataclasses import dataclass

import numpy as np

from . import barrier

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class KktDiagnostics:
    nu_star: float
    C_b: float
    R_b: float
    active: bool


def safe_actor_control(Wa_hat, k_sb, sys, spec, x):
    """``Wa^T x - k_sb R^-1 B^T grad B(x)``; uses no knowledge of ``A`` or ``P``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(Wa_hat, dtype=float).T @ x
    if k_sb != 0.0:
        grad = barrier.reciprocal_barrier_grad(spec, x)
        u = u - k_sb * np.linalg.solve(sys.R, sys.B.T @ grad)
    elif not spec.is_interior(x):
        raise barrier.OutsideInterior("state outside the safe-set interior")
    return u


def closed_loop_jacobian(Wa_hat, k_sb, sys, spec, x):
    """Jacobian of ``A x + B u(x)`` under :func:`safe_actor_control`; sets the integrator substep."""
    J = sys.A + sys.B @ np.asarray(Wa_hat, dtype=float).T
    if k_sb != 0.0:
        H = barrier.reciprocal_barrier_hessian(spec, x)
        J = J - k_sb * sys.B @ np.linalg.solve(sys.R, sys.B.T @ H)
    return J


def kkt_multiplier(sys, spec, P, x):
    """Optimal multiplier of the single barrier constraint.

    ``R_b = g^T B R^-1 B^T g`` with ``g = grad B(x)`` and
    ``C_b = g^T A x - g^T B R^-1 B^T P x - gamma(1/B(x))``, which is the
    constraint residual at the unconstrained optimum. ``nu* = max(C_b/R_b, 0)``,
    and ``nu* = 0`` when ``R_b <= 1e-12`` or the barrier vanishes.
    """
    x = np.asarray(x, dtype=float)
    grad = barrier.reciprocal_barrier_grad(spec, x)
    Bt_g = sys.B.T @ grad
    R_b = float(Bt_g @ np.linalg.solve(sys.R, Bt_g))
    Bs = barrier.reciprocal_barrier(spec, x)
    if R_b <= DEGENERATE_TOL or Bs <= barrier.ORIGIN_TOL:
        return KktDiagnostics(nu_star=0.0, C_b=-np.inf, R_b=R_b, active=False)
    u0 = -np.linalg.solve(sys.R, sys.B.T @ (P @ x))
    C_b = float(grad @ (sys.A @ x) + Bt_g @ u0) - barrier.gamma(spec, 1.0 / Bs)
    nu = max(C_b / R_b, 0.0)
    return KktDiagnostics(nu_star=nu, C_b=C_b, R_b=R_b, active=nu > 0.0)


def optimal_safe_control(sys, spec, P, x):
    """Model-based constrained optimum ``-R^-1 B^T P x - nu* R^-1 B^T grad B(x)``."""
    x = np.asarray(x, dtype=float)
    u = -np.linalg.solve(sys.R, sys.B.T @ (P @ x))
    diag = kkt_multiplier(sys, spec, P, x)
    if diag.active:
        grad = barrier.reciprocal_barrier_grad(spec, x)
        u = u - diag.nu_star * np.linalg.solve(sys.R, sys.B.T @ grad)
    return u

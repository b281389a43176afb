"""Norm-ball safe set with its zeroing and reciprocal barrier functions.

The safe set is ``{x : |x| <= c}`` with zeroing barrier ``h(x) = c^2 - |x|^2``
and reciprocal barrier ``B(x) = (c^2 / (c^2 - |x|^2) - 1)^2``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvariantViolation, NegativeArgument, OutsideInterior, UndefinedAtOrigin

ORIGIN_TOL = 1e-12
INACTIVE_SENTINEL = -1e18


@dataclass(frozen=True)
class BarrierSpec:
    c: float = 1.5
    gamma0: float = 1.0
    eps_interior: float | None = None  # defaults to 1e-9 * c

    def __post_init__(self):
        if not self.c > 0:
            raise InvariantViolation("c > 0")
        if not self.gamma0 > 0:
            raise InvariantViolation("gamma0 > 0")
        if self.eps_interior is None:
            object.__setattr__(self, "eps_interior", 1e-9 * self.c)
        if not self.eps_interior > 0:
            raise InvariantViolation("eps_interior > 0")

    def is_interior(self, x):
        return float(np.linalg.norm(x)) < self.c - self.eps_interior

    def margin(self, x):
        return self.c - float(np.linalg.norm(x))


def _interior_sq(spec, x):
    x = np.asarray(x, dtype=float)
    if not spec.is_interior(x):
        raise OutsideInterior(f"|x| = {np.linalg.norm(x):.6g} not below {spec.c - spec.eps_interior:.6g}")
    return x, float(x @ x)


def zeroing_barrier(spec, x):
    x = np.asarray(x, dtype=float)
    return spec.c**2 - float(x @ x)


def reciprocal_barrier(spec, x):
    x, s = _interior_sq(spec, x)
    return (s / (spec.c**2 - s)) ** 2


def reciprocal_barrier_grad(spec, x):
    x, s = _interior_sq(spec, x)
    c2 = spec.c**2
    return 4.0 * c2 * s * x / (c2 - s) ** 3


def reciprocal_barrier_hessian(spec, x):
    x, s = _interior_sq(spec, x)
    c2 = spec.c**2
    d = c2 - s
    return 4.0 * c2 * (s / d**3 * np.eye(x.size) + (2.0 / d**3 + 6.0 * s / d**4) * np.outer(x, x))


def hessian_norm_bound(c2, s):
    """Spectral norm of the reciprocal-barrier Hessian at ``|x|^2 = s``."""
    d = c2 - s
    return 4.0 * c2 * (s / d**3 + (2.0 / d**3 + 6.0 * s / d**4) * s)


def gamma(spec, s):
    """Linear class-K function ``gamma0 * s``."""
    if s < 0:
        raise NegativeArgument(f"class-K argument must be >= 0, got {s}")
    return spec.gamma0 * s


def constraint_residual(spec, sys, x, u):
    """``grad B(x).(A x + B u) - gamma(1 / B(x))``; non-positive means the constraint holds.

    At the origin (``B(x) <= 1e-12``) the constraint is inactive and the
    sentinel ``-1e18`` is returned.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    Bs = reciprocal_barrier(spec, x)
    if Bs <= ORIGIN_TOL:
        return INACTIVE_SENTINEL
    grad = reciprocal_barrier_grad(spec, x)
    return float(grad @ (sys.A @ x + sys.B @ u)) - gamma(spec, 1.0 / Bs)


def strict_constraint_residual(spec, sys, x, u):
    """Like :func:`constraint_residual` but raises at the origin instead of returning a sentinel."""
    if reciprocal_barrier(spec, x) <= ORIGIN_TOL:
        raise UndefinedAtOrigin("1/B is undefined where B vanishes")
    return constraint_residual(spec, sys, x, u)

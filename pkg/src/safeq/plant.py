"""Fixed-step RK4 simulation of ``x' = A x + B u``."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_vector
from .exceptions import DimensionMismatch, InvariantViolation

HOLDS = ("continuous", "zoh")


@dataclass(frozen=True)
class PlantState:
    t: float
    x: np.ndarray


@dataclass(frozen=True)
class IntegratorConfig:
    """Learning grid and integration options.

    ``hold="continuous"`` evaluates the feedback law at every RK4 stage and
    splits a grid interval into substeps whenever the closed-loop stiffness
    bound exceeds ``cfl / h``. ``hold="zoh"`` keeps the control constant
    across the grid interval (sampled-data controller).
    """

    dt: float = 1e-3
    t_end: float = 20.0
    hold: str = "continuous"
    cfl: float = 1.5

    def __post_init__(self):
        if not 0.0 < self.dt <= 0.01:
            raise InvariantViolation("0 < dt <= 0.01")
        if self.t_end < self.dt:
            raise InvariantViolation("t_end >= dt")
        if abs(self.t_end / self.dt - round(self.t_end / self.dt)) > 1e-9 * max(1.0, self.t_end / self.dt):
            raise InvariantViolation("t_end an integral multiple of dt")
        if self.hold not in HOLDS:
            raise InvariantViolation(f"hold one of {HOLDS}")
        if not self.cfl > 0:
            raise InvariantViolation("cfl > 0")

    @property
    def steps(self):
        return int(round(self.t_end / self.dt))


def dynamics(sys, x, u):
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (sys.n,) or u.shape != (sys.m,):
        raise DimensionMismatch(f"expected x of length {sys.n} and u of length {sys.m}")
    return sys.A @ x + sys.B @ u


def rk4_step(sys, x, u, dt):
    """Classical RK4 step with ``u`` held constant over the step."""
    x = check_vector(x, "x", sys.n)
    u = check_vector(u, "u", sys.m)
    if not dt > 0:
        raise ValueError("dt must be positive")
    Bu = sys.B @ u
    k1 = sys.A @ x + Bu
    k2 = sys.A @ (x + 0.5 * dt * k1) + Bu
    k3 = sys.A @ (x + 0.5 * dt * k2) + Bu
    k4 = sys.A @ (x + dt * k3) + Bu
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_feedback_step(sys, x, t, policy, dt):
    """RK4 step of ``x' = A x + B policy(x, t)`` with the policy evaluated at every stage."""
    f = lambda z, s: sys.A @ z + sys.B @ policy(z, s)  # noqa: E731
    k1 = f(x, t)
    k2 = f(x + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = f(x + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = f(x + dt * k3, t + dt)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_interval(sys, x, t, policy, dt, stiffness=None, cfl=1.5, inside=None):
    """Advance ``x`` from ``t`` to ``t + dt`` under continuous feedback.

    ``stiffness(x)`` bounds the closed-loop Jacobian norm; each substep is
    ``h = min(remaining, cfl / stiffness(x))``. ``inside(x)`` may return False
    to stop early; the function then returns ``(x, False)``.
    """
    x = np.asarray(x, dtype=float)
    tau = 0.0
    while tau < dt * (1.0 - 1e-12):
        h = dt - tau
        if stiffness is not None:
            lam = stiffness(x)
            if lam * h > cfl:
                h = cfl / lam
        x = rk4_feedback_step(sys, x, t + tau, policy, h)
        tau += h
        if inside is not None and not inside(x):
            return x, False
    return x, True

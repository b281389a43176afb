"""Model-free actor-critic core: quadratic basis, integral TD error, update laws."""

import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import matlib
from ._validation import check_symmetric, check_vector
from .exceptions import DimensionMismatch, InvariantViolation, NotWarmedUp

GUARD_RATIO = 1e-6


def n_weights(n, m):
    k = n + m
    return k * (k + 1) // 2


def _triu(k):
    return np.triu_indices(k)


def quadratic_basis(X):
    """Monomials ``X_i X_j`` for ``i <= j`` in row-scan order."""
    X = np.asarray(X, dtype=float)
    rows, cols = _triu(X.size)
    return X[rows] * X[cols]


def vech_weights(Qbar):
    """Weights ``w`` with ``w @ quadratic_basis(X) == X.T Qbar X / 2``.

    Diagonal entries are halved, off-diagonal entries are kept as is (the
    doubled off-diagonal of ``vech`` times the overall one half).
    """
    Q = check_symmetric(Qbar, "Qbar")
    rows, cols = _triu(Q.shape[0])
    return np.where(rows == cols, 0.5, 1.0) * Q[rows, cols]


def unvech(w, n, m):
    """Inverse of :func:`vech_weights`."""
    k = n + m
    w = np.asarray(w, dtype=float)
    if w.shape != (n_weights(n, m),):
        raise DimensionMismatch(f"expected {n_weights(n, m)} weights, got shape {w.shape}")
    Q = np.zeros((k, k))
    rows, cols = _triu(k)
    Q[rows, cols] = w
    Q = Q + Q.T  # diagonal becomes 2 w, off-diagonal w
    return Q


def extract_gain(Wc_hat, n, m, R):
    """Return ``(Q21_hat, Q22_hat)`` from critic weights.

    ``Q22_hat`` is lifted to have smallest eigenvalue ``1e-6 * lambda_min(R)``
    when it falls below that floor, so it is always invertible.
    """
    Q = unvech(Wc_hat, n, m)
    Q21 = Q[n:, :n]
    Q22 = Q[n:, n:]
    floor = GUARD_RATIO * matlib.min_eig_sym(R)
    lam = matlib.min_eig_sym(Q22)
    if lam < floor:
        Q22 = Q22 + (floor - lam) * np.eye(m)
    return Q21, Q22


def initial_critic_weights(R, n):
    """Critic weights whose Q22 block equals the known input weight ``R``."""
    R = check_symmetric(R, "R")
    m = R.shape[0]
    Q = np.zeros((n + m, n + m))
    Q[n:, n:] = R
    return vech_weights(Q)


@dataclass(frozen=True)
class LearnGains:
    eta_c: float = 20.0
    eta_a: float = 0.05
    Wa_bound: float = 50.0
    T: float = 0.01
    k_sb: float = 0.2

    def __post_init__(self):
        for name in ("eta_c", "eta_a", "k_sb"):
            if not getattr(self, name) >= 0:
                raise InvariantViolation(f"{name} >= 0")
        if not self.Wa_bound > 0:
            raise InvariantViolation("Wa_bound > 0")
        if not self.T > 0:
            raise InvariantViolation("T > 0")
        if self.eta_a > 0 and self.eta_c < 10 * self.eta_a:
            warnings.warn("critic gain should be much larger than the actor gain", stacklevel=2)

    def window_samples(self, dt):
        ratio = self.T / dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
            raise InvariantViolation("T an integral multiple of dt")
        return int(round(ratio))


class IntegralWindow:
    """Sliding buffer of ``(t, phi, cost)`` samples spanning ``T``."""

    def __init__(self, intervals, dt):
        self.intervals = intervals
        self.dt = dt
        self._buf = deque(maxlen=intervals + 1)

    def __len__(self):
        return len(self._buf)

    @property
    def warm(self):
        return len(self._buf) == self.intervals + 1

    @property
    def oldest(self):
        return self._buf[0]

    @property
    def newest(self):
        return self._buf[-1]

    def push(self, t, phi, cost):
        if self._buf:
            gap = t - self._buf[-1][0]
            if abs(gap - self.dt) > 1e-9 * self.dt:
                raise ValueError(f"samples must be spaced by dt={self.dt}, got {gap}")
        self._buf.append((t, phi, cost))

    def integral(self):
        """Trapezoidal integral of the stored cost over the window."""
        if not self.warm:
            raise NotWarmedUp(f"{len(self._buf)} of {self.intervals + 1} samples")
        costs = [c for _, _, c in self._buf]
        return self.dt * (sum(costs) - 0.5 * (costs[0] + costs[-1]))


class LearnerState:
    """Critic and actor estimates plus the integral window (single owner, mutable)."""

    def __init__(self, Wc_hat, Wa_hat, window):
        self.Wc_hat = np.array(Wc_hat, dtype=float)
        self.Wa_hat = np.array(Wa_hat, dtype=float)
        self.window = window
        self.td_error = np.nan
        self.psi = None

    @classmethod
    def initial(cls, sys, gains, dt, Wc0=None, Wa0=None):
        Wc = initial_critic_weights(sys.R, sys.n) if Wc0 is None else check_vector(Wc0, "Wc0", n_weights(sys.n, sys.m))
        Wa = np.zeros((sys.n, sys.m)) if Wa0 is None else np.array(Wa0, dtype=float).reshape(sys.n, sys.m)
        return cls(Wc, Wa, IntegralWindow(gains.window_samples(dt), dt))


def window_push_and_integrate(state, t, X, cost_integrand):
    """Push a sample and return the window integral of the cost (raises NotWarmedUp)."""
    state.window.push(t, quadratic_basis(X), cost_integrand)
    return state.window.integral()


def td_error(state, phi_now, phi_then, window_integral):
    """Integral TD error ``e = Wc.psi + int cost`` with ``psi = phi(t) - phi(t - T)``."""
    psi = np.asarray(phi_now, dtype=float) - np.asarray(phi_then, dtype=float)
    return float(state.Wc_hat @ psi) + window_integral, psi


def critic_derivative(e_c, psi, eta_c):
    psi = np.asarray(psi, dtype=float)
    return -eta_c * psi / (1.0 + psi @ psi) ** 2 * e_c


def actor_derivative(Wa_hat, Q21_hat, Q22_hat, eta_a, Wa_bound):
    """Projected actor flow ``proj(-eta_a (Q21^T Q22^-1 + Wa))``.

    On the bound sphere an outward-pointing update keeps only its tangential part.
    """
    Wa_hat = np.asarray(Wa_hat, dtype=float)
    target = np.linalg.solve(Q22_hat, Q21_hat).T  # Q21^T Q22^-1 (Q22 symmetric)
    raw = -eta_a * (target + Wa_hat)
    norm_sq = float(np.sum(Wa_hat * Wa_hat))
    inner = float(np.sum(Wa_hat * raw))
    if np.sqrt(norm_sq) >= Wa_bound and inner > 0:
        raw = raw - inner / norm_sq * Wa_hat
    return raw


def stage_cost(sys, x, u):
    return 0.5 * (float(x @ sys.M @ x) + float(u @ sys.R @ u))


def learner_step(state, gains, t, x, u, dt, sys):
    """One grid step of learning with explicit Euler on both weight flows.

    ``u`` is the control whose Q-value is being learned (the noise-free
    estimated safe control). Before the window spans ``T`` the weights are
    left unchanged and ``state.td_error`` is NaN.
    """
    n, m = sys.n, sys.m
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    X = np.concatenate([x, u])
    try:
        integral = window_push_and_integrate(state, t, X, stage_cost(sys, x, u))
    except NotWarmedUp:
        state.td_error = np.nan
        state.psi = None
        return state
    e_c, psi = td_error(state, state.window.newest[1], state.window.oldest[1], integral)
    dWc = critic_derivative(e_c, psi, gains.eta_c)
    Q21, Q22 = extract_gain(state.Wc_hat, n, m, sys.R)
    dWa = actor_derivative(state.Wa_hat, Q21, Q22, gains.eta_a, gains.Wa_bound)
    state.Wc_hat = state.Wc_hat + dt * dWc
    Wa = state.Wa_hat + dt * dWa
    norm = np.linalg.norm(Wa)
    if norm > gains.Wa_bound:
        Wa = Wa * (gains.Wa_bound / norm)
    state.Wa_hat = Wa
    state.td_error = e_c
    state.psi = psi
    return state

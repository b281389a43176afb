"""Compiled episode loops.

These mirror the reference implementation in :mod:`safeq.harness` (``engine="python"``),
which is built from the public module functions. Tests check both agree.
"""

import math

import numpy as np
from numba import njit

OK, BREACH, DIVERGED = 0, 1, 2
DIVERGENCE_NORM = 1e6
BREACH_FACTOR = 1.0 + 1e-6


@njit(cache=True)
def _barrier_grad(x, c2):
    s = x @ x
    return 4.0 * c2 * s * x / (c2 - s) ** 3


@njit(cache=True)
def _barrier(x, c2):
    s = x @ x
    return (s / (c2 - s)) ** 2


@njit(cache=True)
def _jacobian_norm(x, A_cl, BG, k_sb, c2):
    """Frobenius norm of the closed-loop Jacobian at ``x`` (bounds its spectral radius)."""
    J = A_cl.copy()
    if k_sb != 0.0:
        s = x @ x
        d = c2 - s
        alpha = 4.0 * c2 * s / d**3
        beta = 4.0 * c2 * (2.0 / d**3 + 6.0 * s / d**4)
        J -= k_sb * (alpha * BG + beta * np.outer(BG @ x, x))
    return math.sqrt(np.sum(J * J))


@njit(cache=True)
def _actor(x, Wa, k_sb, G, c2):
    u = Wa.T @ x
    if k_sb != 0.0:
        u = u - k_sb * (G @ _barrier_grad(x, c2))
    return u


@njit(cache=True)
def _noise(t, amp, omega, phases, t_off, m):
    out = np.zeros(m)
    if t < t_off and amp != 0.0:
        for j in range(m):
            acc = 0.0
            for k in range(omega.shape[0]):
                acc += math.sin(omega[k] * t + phases[j, k])
            out[j] = amp * acc
    return out


@njit(cache=True)
def _inside(x, c2, limit2, k_sb, interior2):
    s = x @ x
    if s >= limit2:
        return False
    if k_sb != 0.0 and s >= interior2:
        return False
    return True


@njit(cache=True)
def learning_episode(A, B, M, R, c, eps, k_sb, eta_c, eta_a, Wa_bound, dt, steps, N,
                     x0, Wc0, Wa0, amp, omega, phases, t_off, zoh, cfl):
    n = A.shape[0]
    m = B.shape[1]
    k = n + m
    p = k * (k + 1) // 2
    c2 = c * c
    limit2 = (c * BREACH_FACTOR) ** 2
    interior2 = (c - eps) ** 2
    G = np.linalg.solve(R, B.T)
    BG = B @ G
    floor = 1e-6 * np.linalg.eigvalsh(R)[0]

    xs = np.zeros((steps + 1, n))
    us = np.zeros((steps + 1, m))
    uhats = np.zeros((steps + 1, m))
    ecs = np.full(steps + 1, np.nan)
    Wcs = np.zeros((steps + 1, p))
    Was = np.zeros((steps + 1, n, m))
    pe = np.zeros((p, p))
    pe_count = 0

    phis = np.zeros((N + 1, p))
    costs = np.zeros(N + 1)
    filled = 0
    head = 0  # index of the oldest sample once full

    x = x0.copy()
    Wc = Wc0.copy()
    Wa = Wa0.copy()
    X = np.zeros(k)
    phi = np.zeros(p)
    status = OK
    last = steps
    breach_x = np.full(n, np.nan)
    breach_t = np.nan

    for i in range(steps + 1):
        t = i * dt
        uhat = _actor(x, Wa, k_sb, G, c2)
        u = uhat + _noise(t, amp, omega, phases, t_off, m)
        xs[i] = x
        us[i] = u
        uhats[i] = uhat
        Wcs[i] = Wc
        Was[i] = Wa

        for r in range(n):
            X[r] = x[r]
        for r in range(m):
            X[n + r] = uhat[r]
        q = 0
        for a in range(k):
            for b in range(a, k):
                phi[q] = X[a] * X[b]
                q += 1
        cost = 0.5 * (x @ (M @ x) + uhat @ (R @ uhat))

        if filled < N + 1:
            phis[filled] = phi
            costs[filled] = cost
            filled += 1
            oldest = 0
        else:
            phis[head] = phi
            costs[head] = cost
            head = (head + 1) % (N + 1)
            oldest = head

        Wc_next = Wc
        Wa_next = Wa
        if filled == N + 1:
            total = 0.0
            # chronological order keeps the summation identical to the reference path
            for r in range(N + 1):
                total += costs[(oldest + r) % (N + 1)]
            integral = dt * (total - 0.5 * (costs[oldest] + cost))
            psi = phi - phis[oldest]
            e_c = Wc @ psi + integral
            ecs[i] = e_c
            norm_psi = 1.0 + psi @ psi
            dWc = -eta_c * psi / norm_psi**2 * e_c
            if t < t_off:
                mvec = psi / norm_psi
                pe += np.outer(mvec, mvec)
                pe_count += 1

            Q = np.zeros((k, k))
            q = 0
            for a in range(k):
                for b in range(a, k):
                    Q[a, b] += Wc[q]
                    Q[b, a] += Wc[q]
                    q += 1
            Q21 = Q[n:, :n].copy()
            Q22 = Q[n:, n:].copy()
            lam = np.linalg.eigvalsh(Q22)[0]
            if lam < floor:
                for r in range(m):
                    Q22[r, r] += floor - lam
            raw = -eta_a * (np.linalg.solve(Q22, Q21).T + Wa)
            norm_sq = np.sum(Wa * Wa)
            inner = np.sum(Wa * raw)
            if math.sqrt(norm_sq) >= Wa_bound and inner > 0.0:
                raw = raw - inner / norm_sq * Wa
            Wc_next = Wc + dt * dWc
            Wa_next = Wa + dt * raw
            nrm = math.sqrt(np.sum(Wa_next * Wa_next))
            if nrm > Wa_bound:
                Wa_next = Wa_next * (Wa_bound / nrm)

        if i == steps:
            break

        # plant over [t, t + dt] with the weights in force at t
        tau = 0.0
        inside = True
        while tau < dt * (1.0 - 1e-12):
            h = dt - tau
            if not zoh:
                lam_s = _jacobian_norm(x, A + B @ Wa.T, BG, k_sb, c2)
                if lam_s * h > cfl:
                    h = cfl / lam_s
            ts = t + tau
            if zoh:
                Bu = B @ u
                k1 = A @ x + Bu
                k2 = A @ (x + 0.5 * h * k1) + Bu
                k3 = A @ (x + 0.5 * h * k2) + Bu
                k4 = A @ (x + h * k3) + Bu
            else:
                k1 = A @ x + B @ (_actor(x, Wa, k_sb, G, c2) + _noise(ts, amp, omega, phases, t_off, m))
                z = x + 0.5 * h * k1
                k2 = A @ z + B @ (_actor(z, Wa, k_sb, G, c2) + _noise(ts + 0.5 * h, amp, omega, phases, t_off, m))
                z = x + 0.5 * h * k2
                k3 = A @ z + B @ (_actor(z, Wa, k_sb, G, c2) + _noise(ts + 0.5 * h, amp, omega, phases, t_off, m))
                z = x + h * k3
                k4 = A @ z + B @ (_actor(z, Wa, k_sb, G, c2) + _noise(ts + h, amp, omega, phases, t_off, m))
            x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            tau += h
            if not _inside(x, c2, limit2, k_sb, interior2):
                inside = False
                break
        Wc = Wc_next
        Wa = Wa_next
        if not inside:
            status = BREACH
            breach_x = x.copy()
            breach_t = t + tau
            last = i
            break
        if math.sqrt(x @ x) > DIVERGENCE_NORM:
            status = DIVERGED
            last = i
            break

    return (xs[: last + 1], us[: last + 1], uhats[: last + 1], ecs[: last + 1],
            Wcs[: last + 1], Was[: last + 1], pe, pe_count, status, breach_t, breach_x)


@njit(cache=True)
def _oracle_control(x, BG, GP, Acl, A, c2, gamma0):
    """KKT-optimal safe control and its multiplier (``BG = B R^-1 B^T``, ``GP = R^-1 B^T P``)."""
    u = -(GP @ x)
    s = x @ x
    if s == 0.0:
        return u, 0.0
    d = c2 - s
    grad = (4.0 * c2 * s / (d * d * d)) * x
    BGg = BG @ grad
    R_b = grad @ BGg
    Bs = (s / d) ** 2
    if R_b <= 1e-12 or Bs <= 1e-12:
        return u, 0.0
    C_b = grad @ (Acl @ x) - gamma0 / Bs
    nu = C_b / R_b
    if nu <= 0.0:
        return u, 0.0
    return u, nu


@njit(cache=True)
def _oracle_field(x, BG, GP, Acl, A, c2, gamma0):
    nu = _oracle_control(x, BG, GP, Acl, A, c2, gamma0)[1]
    f = Acl @ x
    if nu > 0.0:
        s = x @ x
        d = c2 - s
        f = f - (nu * 4.0 * c2 * s / (d * d * d)) * (BG @ x)
    return f


@njit(cache=True)
def oracle_episode(A, B, R, P, c, eps, gamma0, dt, steps, x0, cfl):
    n = A.shape[0]
    m = B.shape[1]
    c2 = c * c
    limit2 = (c * BREACH_FACTOR) ** 2
    interior2 = (c - eps) ** 2
    G = np.linalg.solve(R, B.T)
    BG = B @ G
    GP = G @ P
    Acl = A - B @ GP
    lam_s = np.linalg.norm(A, 2) + np.linalg.norm(B @ GP, 2)
    xs = np.zeros((steps + 1, n))
    us = np.zeros((steps + 1, m))
    nus = np.zeros(steps + 1)
    x = x0.copy()
    status = OK
    last = steps
    for i in range(steps + 1):
        u, nu = _oracle_control(x, BG, GP, Acl, A, c2, gamma0)
        if nu > 0.0:
            s = x @ x
            d = c2 - s
            u = u - (nu * 4.0 * c2 * s / (d * d * d)) * (G @ x)
        xs[i] = x
        us[i] = u
        nus[i] = nu
        if i == steps:
            break
        tau = 0.0
        while tau < dt * (1.0 - 1e-12):
            h = dt - tau
            if lam_s * h > cfl:
                h = cfl / lam_s
            k1 = _oracle_field(x, BG, GP, Acl, A, c2, gamma0)
            k2 = _oracle_field(x + 0.5 * h * k1, BG, GP, Acl, A, c2, gamma0)
            k3 = _oracle_field(x + 0.5 * h * k2, BG, GP, Acl, A, c2, gamma0)
            k4 = _oracle_field(x + h * k3, BG, GP, Acl, A, c2, gamma0)
            x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            tau += h
        s = x @ x
        if s >= limit2 or s >= interior2:
            status = BREACH
            last = i + 1
            xs[last] = x
            break
    return xs[: last + 1], us[: last + 1], nus[: last + 1], status

"""Property suite behind ``safeq verify``: every module invariant, checked numerically."""

import time
from dataclasses import dataclass, replace

import numpy as np

from . import barrier, matlib, plant, qlearn, safecontrol
from .harness import (
    REFERENCE_KSB,
    ExperimentConfig,
    run_episode,
    run_oracle_episode,
    sweep_ksb,
    td_oracle_config,
)
from .riccati import SystemModel, are_residual, is_hurwitz, solve_care

SEEDS = 20


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def random_stabilizable_system(rng, n, m):
    """Random plant whose rightmost eigenvalue is shifted to lie in [-1, 0.5]."""
    A = rng.normal(size=(n, n))
    target = rng.uniform(-1.0, 0.5)
    A = A - (np.linalg.eigvals(A).real.max() - target) * np.eye(n)
    B = rng.normal(size=(n, m))
    L = rng.normal(size=(n, n))
    M = L @ L.T + 0.1 * np.eye(n)
    S = rng.normal(size=(m, m))
    R = S @ S.T + 0.5 * np.eye(m)
    return SystemModel(A=A, B=B, M=M, R=R)


def random_symmetric(rng, k):
    S = rng.normal(size=(k, k))
    return S + S.T


# ---------------------------------------------------------------- matlib

def check_solve_residual(rng, trials=1000):
    worst = 0.0
    for _ in range(trials):
        k = rng.integers(1, 9)
        A = rng.normal(size=(k, k)) + k * np.eye(k)
        if np.linalg.cond(A) >= 1e6:
            continue
        b = rng.normal(size=k)
        x = matlib.solve_linear(A, b)
        worst = max(worst, np.linalg.norm(A @ x - b) / (1e-10 * (1 + np.linalg.norm(b))))
    return worst <= 1.0, f"max residual / bound = {worst:.3g}"


def check_kron_vec(rng, trials=200):
    worst = 0.0
    for _ in range(trials):
        k = rng.choice([2, 3])
        A, X, B = (rng.normal(size=(k, k)) for _ in range(3))
        lhs = matlib.vec(A @ X @ B.T)
        rhs = matlib.kron(B, A) @ matlib.vec(X)
        worst = max(worst, np.abs(lhs - rhs).max())
    return worst <= 1e-10, f"max deviation {worst:.3g}"


def check_sym_eig_2x2(rng, trials=1000):
    worst = 0.0
    for _ in range(trials):
        a, b, d = rng.normal(size=3)
        roots = np.roots([1.0, -(a + d), a * d - b * b])
        worst = max(worst, abs(matlib.min_eig_sym([[a, b], [b, d]]) - roots.real.min()))
    return worst <= 1e-9, f"max deviation {worst:.3g}"


# ---------------------------------------------------------------- riccati

def check_care_random(rng, trials=100, perturb=0.0):
    worst_res, bad = 0.0, 0
    for _ in range(trials):
        n = int(rng.integers(1, 4))
        # full column rank of B needs m <= n
        sys = random_stabilizable_system(rng, n, int(rng.integers(1, min(n, 2) + 1)))
        sol = solve_care(sys)
        P = sol.P + perturb
        worst_res = max(worst_res, are_residual(sys, P))
        closed = sys.A - sys.B @ np.linalg.solve(sys.R, sys.B.T @ P)
        if not (matlib.is_positive_definite(P) and is_hurwitz(closed)):
            bad += 1
    return worst_res <= 1e-8 and bad == 0, f"max ARE residual {worst_res:.3g}, {bad} not PD/Hurwitz"


def check_ideal_fixed_point(sys, rng, trials=1000):
    sol = solve_care(sys)
    worst = 0.0
    for _ in range(trials):
        x = rng.normal(size=sys.n)
        X = np.concatenate([x, sol.Wa.T @ x])
        worst = max(worst, abs(0.5 * X @ sol.Qbar @ X - 0.5 * x @ sol.P @ x))
    return worst <= 1e-9, f"max |Q(x,u*) - V(x)| = {worst:.3g}"


# ---------------------------------------------------------------- plant

def rk4_endpoint(sys, K, x0, dt, t_end):
    policy = lambda z, t: -K @ z  # noqa: E731
    x = np.array(x0, dtype=float)
    for i in range(int(round(t_end / dt))):
        x = plant.rk4_feedback_step(sys, x, i * dt, policy, dt)
    return x


def check_rk4_order(sys):
    K = solve_care(sys).gain
    ends = [rk4_endpoint(sys, K, [1.0, 1.0], dt, 2.0) for dt in (0.01, 0.005, 0.0025)]
    ratio = np.linalg.norm(ends[0] - ends[1]) / np.linalg.norm(ends[1] - ends[2])
    return 12.0 <= ratio <= 20.0, f"halving ratio {ratio:.3f}"


def check_rk4_linearity(sys, rng, trials=200):
    worst = 0.0
    for _ in range(trials):
        x1, x2 = rng.normal(size=(2, sys.n))
        u1, u2 = rng.normal(size=(2, sys.m))
        lhs = plant.rk4_step(sys, x1 + x2, u1 + u2, 1e-3)
        rhs = plant.rk4_step(sys, x1, u1, 1e-3) + plant.rk4_step(sys, x2, u2, 1e-3)
        worst = max(worst, np.abs(lhs - rhs).max())
    return worst <= 1e-12, f"max superposition error {worst:.3g}"


# ---------------------------------------------------------------- barrier

def check_barrier_blowup(spec, n=2):
    direction = np.ones(n) / np.sqrt(n)
    radii = spec.c * (1.0 - np.logspace(-1, -4, 40))
    values = [barrier.reciprocal_barrier(spec, r * direction) for r in radii]
    monotone = bool(np.all(np.diff(values) > 0))
    return monotone and values[-1] > 1e6, f"B at c(1-1e-4) = {values[-1]:.3g}, monotone={monotone}"


def fd_gradient(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def random_interior(rng, spec, n, max_frac):
    d = rng.normal(size=n)
    return d / np.linalg.norm(d) * spec.c * max_frac * rng.uniform(0.05, 1.0)


def check_barrier_gradient(spec, rng, trials=100, n=2):
    worst = 0.0
    for _ in range(trials):
        x = random_interior(rng, spec, n, 0.95)
        g = barrier.reciprocal_barrier_grad(spec, x)
        fd = fd_gradient(lambda z: barrier.reciprocal_barrier(spec, z), x)
        worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(g))
    return worst <= 1e-5, f"max relative error {worst:.3g}"


def check_barrier_consistency(spec, rng, trials=500, n=2):
    bad = 0
    for _ in range(trials):
        x = rng.normal(size=n) * spec.c
        interior = spec.is_interior(x)
        finite = interior and np.isfinite(barrier.reciprocal_barrier(spec, x))
        if (barrier.zeroing_barrier(spec, x) > 0) != interior or interior != finite:
            # points within eps_interior of the boundary are the only allowed gap
            if abs(spec.margin(x)) > spec.eps_interior:
                bad += 1
    return bad == 0, f"{bad} inconsistent samples"


# ---------------------------------------------------------------- qlearn

def check_parameterization(rng, trials=1000):
    worst, roundtrip = 0.0, 0.0
    for _ in range(trials):
        n, m = rng.integers(1, 4), rng.integers(1, 3)
        Q = random_symmetric(rng, n + m)
        X = rng.normal(size=n + m)
        w = qlearn.vech_weights(Q)
        worst = max(worst, abs(w @ qlearn.quadratic_basis(X) - 0.5 * X @ Q @ X))
        roundtrip = max(roundtrip, np.abs(qlearn.unvech(w, n, m) - Q).max())
    return worst <= 1e-12 * 100 and roundtrip == 0.0, f"max identity error {worst:.3g}, roundtrip {roundtrip:.3g}"


def check_regressor_bound(rng, trials=2000):
    worst = 0.0
    for _ in range(trials):
        psi = rng.normal(size=6) * 10 ** rng.uniform(-3, 3)
        worst = max(worst, np.linalg.norm(psi / (1 + psi @ psi)))
    return worst <= 0.5, f"max normalised norm {worst:.4f}"


def check_td_oracle(cfg):
    log, _ = run_episode(td_oracle_config(cfg))
    worst = float(np.nanmax(np.abs(log.td_error)))
    return worst <= 1e-6, f"max |e_c| = {worst:.3g}"


# ---------------------------------------------------------------- safecontrol

def sample_states(rng, spec, n, count, min_margin=0.05):
    states = []
    while len(states) < count:
        x = rng.uniform(-spec.c, spec.c, size=n)
        if spec.margin(x) >= min_margin:
            states.append(x)
    return np.array(states)


def check_kkt(cfg, rng, count=2000):
    sys, spec = cfg.sys, cfg.spec
    P = solve_care(sys).P
    worst_feas, worst_slack, invasive = -np.inf, 0.0, 0
    for x in sample_states(rng, spec, sys.n, count):
        u_nom = -np.linalg.solve(sys.R, sys.B.T @ P @ x)
        diag = safecontrol.kkt_multiplier(sys, spec, P, x)
        u = safecontrol.optimal_safe_control(sys, spec, P, x)
        res = barrier.constraint_residual(spec, sys, x, u)
        if barrier.constraint_residual(spec, sys, x, u_nom) <= 0 and not np.allclose(u, u_nom, rtol=1e-12, atol=1e-12):
            invasive += 1
        if diag.R_b > 1e-12:
            worst_feas = max(worst_feas, res / max(1.0, diag.R_b ** 0.5 * np.linalg.norm(u)))
        worst_slack = max(worst_slack, abs(diag.nu_star * res))
    ok = worst_feas <= 1e-9 and worst_slack <= 1e-9 and invasive == 0
    return ok, f"max scaled residual {worst_feas:.3g}, max |nu*res| {worst_slack:.3g}, invasive {invasive}"


def check_certainty_equivalence_gap(cfg, rng, count=500):
    sys, spec = cfg.sys, cfg.spec
    sol = solve_care(sys)
    worst, used = 0.0, 0
    for x in sample_states(rng, spec, sys.n, count):
        if safecontrol.kkt_multiplier(sys, spec, sol.P, x).active:
            continue
        used += 1
        gap = safecontrol.safe_actor_control(sol.Wa, cfg.gains.k_sb, sys, spec, x) - safecontrol.optimal_safe_control(sys, spec, sol.P, x)
        expected = -cfg.gains.k_sb * np.linalg.solve(sys.R, sys.B.T @ barrier.reciprocal_barrier_grad(spec, x))
        worst = max(worst, np.abs(gap - expected).max() / max(1.0, np.abs(expected).max()))
    return worst <= 1e-12, f"{used} inactive states, max deviation {worst:.3g}"


def check_oracle_invariance(cfg, rng, count=100):
    sol = solve_care(cfg.sys)
    breaches, peak = 0, 0.0
    for _ in range(count):
        x0 = random_interior(rng, cfg.spec, cfg.sys.n, 1.4 / cfg.spec.c)
        run = run_oracle_episode(cfg.sys, cfg.spec, x0, cfg.integ, sol)
        breaches += run.breached
        peak = max(peak, run.max_norm)
    return breaches == 0 and peak < cfg.spec.c, f"{breaches} breaches, max |x| = {peak:.4f}"


# ---------------------------------------------------------------- harness

class EpisodeCache:
    """Runs each seed once and shares the result among the harness properties."""

    def __init__(self, cfg):
        self.cfg = cfg
        self._runs = {}

    def get(self, seed):
        if seed not in self._runs:
            self._runs[seed] = run_episode(replace(self.cfg, seed=seed))
        return self._runs[seed]


def check_determinism(cache):
    log1, _ = cache.get(0)
    log2, _ = run_episode(replace(cache.cfg, seed=0))
    same = all(np.array_equal(getattr(log1, f), getattr(log2, f), equal_nan=True)
               for f in ("x", "u", "critic", "actor", "td_error"))
    return same, "bit-identical" if same else "logs differ"


def check_safety_seeds(cache, seeds=SEEDS):
    margins = [cache.get(s)[1].min_margin for s in range(seeds)]
    return min(margins) >= 0, f"min margin over {seeds} seeds = {min(margins):.4f}"


def check_boundedness(cache, seeds=SEEDS):
    bound = cache.cfg.gains.Wa_bound
    worst_actor, finite = 0.0, True
    for s in range(seeds):
        log, met = cache.get(s)
        finite &= bool(np.all(np.isfinite(log.x)) and np.all(np.isfinite(log.critic)) and np.all(np.isfinite(log.actor)))
        worst_actor = max(worst_actor, met.max_actor_norm / bound)
    return finite and worst_actor <= 1.0 + 1e-12, f"finite={finite}, max |Wa|/bound = {worst_actor:.15g}"


def check_pe(cache):
    pe = cache.get(0)[1].pe_min_eig
    return bool(pe > 0), f"lambda_min of averaged normalised regressor = {pe:.3g}"


def check_regulation(cache):
    final = cache.get(0)[1].final_norm
    return final <= 0.05, f"|x(t_end)| = {final:.4g}"


def check_actor_convergence(cache):
    err = cache.get(0)[1].actor_error
    return err <= 0.25, f"relative actor error {err:.4g}"


def check_sweep(cfg):
    rows = sweep_ksb(cfg, REFERENCE_KSB)
    costs = [m.total_cost for _, m in rows]
    peaks = {k: m.peak_control for k, m in rows}
    margins = [m.min_margin for _, m in rows]
    cost_ok = all(b <= a * 1.02 for a, b in zip(costs, costs[1:]))
    peak_ok = peaks[0.2] <= peaks[0.3] <= peaks[0.5]
    margin_ok = all(b >= a - 1e-12 for a, b in zip(margins, margins[1:]))
    safe = all(not m.safety_violated for _, m in rows)
    detail = (f"costs {np.round(costs, 3).tolist()} non-increasing={cost_ok}; peak ordering={peak_ok}; "
              f"margins non-decreasing={margin_ok}; safe={safe}")
    return cost_ok and peak_ok and margin_ok and safe, detail


def property_checks(cfg, fault=None):
    """Ordered ``(name, thunk)`` pairs covering all module properties."""
    rng = lambda k: np.random.default_rng(1000 + k)  # noqa: E731
    cache = EpisodeCache(cfg)
    perturb = 1e-3 if fault == "are" else 0.0
    return [
        ("matlib.solve_residual", lambda: check_solve_residual(rng(0))),
        ("matlib.kron_vec_identity", lambda: check_kron_vec(rng(1))),
        ("matlib.sym_eig_2x2", lambda: check_sym_eig_2x2(rng(2))),
        ("riccati.are_residual_random", lambda: check_care_random(rng(3), perturb=perturb)),
        ("riccati.ideal_fixed_point", lambda: check_ideal_fixed_point(cfg.sys, rng(4))),
        ("plant.rk4_fourth_order", lambda: check_rk4_order(cfg.sys)),
        ("plant.rk4_superposition", lambda: check_rk4_linearity(cfg.sys, rng(5))),
        ("barrier.reciprocal_blowup", lambda: check_barrier_blowup(cfg.spec, cfg.sys.n)),
        ("barrier.gradient_fd", lambda: check_barrier_gradient(cfg.spec, rng(6), n=cfg.sys.n)),
        ("barrier.interior_consistency", lambda: check_barrier_consistency(cfg.spec, rng(7), n=cfg.sys.n)),
        ("qlearn.parameterization", lambda: check_parameterization(rng(8))),
        ("qlearn.regressor_bound", lambda: check_regressor_bound(rng(9))),
        ("qlearn.td_oracle", lambda: check_td_oracle(cfg)),
        ("qlearn.persistence_of_excitation", lambda: check_pe(cache)),
        ("safecontrol.kkt", lambda: check_kkt(cfg, rng(10))),
        ("safecontrol.certainty_equivalence_gap", lambda: check_certainty_equivalence_gap(cfg, rng(11))),
        ("safecontrol.oracle_forward_invariance", lambda: check_oracle_invariance(cfg, rng(12))),
        ("harness.determinism", lambda: check_determinism(cache)),
        ("harness.safety_20_seeds", lambda: check_safety_seeds(cache)),
        ("harness.boundedness", lambda: check_boundedness(cache)),
        ("harness.regulation", lambda: check_regulation(cache)),
        ("harness.actor_convergence", lambda: check_actor_convergence(cache)),
        ("harness.ksb_sweep_trends", lambda: check_sweep(cfg)),
    ]


def run_properties(cfg=None, fault=None, report=print):
    cfg = cfg or ExperimentConfig()
    results = []
    for name, thunk in property_checks(cfg, fault):
        start = time.perf_counter()
        try:
            passed, detail = thunk()
        except Exception as exc:  # a crashing property is a failing property
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        res = PropertyResult(name, bool(passed), detail, time.perf_counter() - start)
        results.append(res)
        if report:
            report(f"[{'PASS' if res.passed else 'FAIL'}] {name}: {detail} ({res.seconds:.2f}s)")
    return results

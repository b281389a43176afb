"""Closed-loop episodes, metrics, and the safety-gain sweep."""

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels, barrier, plant, qlearn, safecontrol
from ._validation import check_vector
from .barrier import BarrierSpec
from .exceptions import InvariantViolation, NumericalDivergence, SafetyBreach
from .plant import IntegratorConfig
from .qlearn import LearnGains, LearnerState
from .riccati import SystemModel, benchmark_system, solve_care

# published benchmark results: (k_sb, total cost, peak control effort)
REFERENCE_TABLE = (
    (0.01, 43.652, 18.746),
    (0.1, 40.631, 18.45),
    (0.2, 40.021, 18.39),
    (0.3, 39.833, 24.0),
    (0.5, 39.293, 40.0),
)
REFERENCE_KSB = tuple(row[0] for row in REFERENCE_TABLE)


@dataclass(frozen=True)
class NoiseSpec:
    """Multi-tone exploration signal ``amplitude * sum_k sin(w_k t + phase_jk)``."""

    amplitude: float = 1.0
    num_tones: int = 10
    freq_lo: float = 0.5
    freq_hi: float = 50.0
    t_off: float = 10.0
    phases: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise InvariantViolation("noise amplitude >= 0")
        if self.num_tones < 1:
            raise InvariantViolation("noise_tones >= 1")
        if not 0 < self.freq_lo <= self.freq_hi:
            raise InvariantViolation("0 < freq_lo <= freq_hi")
        if self.num_tones > 1 and not self.freq_lo < self.freq_hi:
            raise InvariantViolation("frequencies strictly increasing")

    @property
    def frequencies(self):
        return np.geomspace(self.freq_lo, self.freq_hi, self.num_tones)

    def with_phases(self, m, seed):
        rng = np.random.default_rng(seed)
        return replace(self, phases=rng.uniform(0.0, 2.0 * np.pi, size=(m, self.num_tones)))


def exploration_noise(noise, t):
    if noise.phases is None:
        raise ValueError("noise phases not drawn; use NoiseSpec.with_phases")
    m = noise.phases.shape[0]
    if t >= noise.t_off or noise.amplitude == 0.0:
        return np.zeros(m)
    return noise.amplitude * np.sin(noise.frequencies * t + noise.phases).sum(axis=1)


@dataclass(frozen=True)
class ExperimentConfig:
    sys: SystemModel = field(default_factory=benchmark_system)
    spec: BarrierSpec = field(default_factory=BarrierSpec)
    gains: LearnGains = field(default_factory=LearnGains)
    integ: IntegratorConfig = field(default_factory=IntegratorConfig)
    x0: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0]))
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    baseline: bool = False
    Wc0: np.ndarray | None = None
    Wa0: np.ndarray | None = None

    def __post_init__(self):
        x0 = check_vector(self.x0, "x0", self.sys.n)
        object.__setattr__(self, "x0", x0)
        if not np.linalg.norm(x0) < self.spec.c:
            raise InvariantViolation("x0 strict interior")
        self.gains.window_samples(self.integ.dt)

    @property
    def k_sb(self):
        return 0.0 if self.baseline else self.gains.k_sb

    def with_ksb(self, k_sb):
        return replace(self, gains=replace(self.gains, k_sb=k_sb))


@dataclass
class TrajectoryLog:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray  # applied control (exploration noise included)
    u_hat: np.ndarray  # estimated safe control seen by the learner
    norm_x: np.ndarray
    barrier: np.ndarray
    td_error: np.ndarray
    margin: np.ndarray
    critic: np.ndarray
    actor: np.ndarray  # shape (steps, n, m)

    def __len__(self):
        return self.t.shape[0]


@dataclass(frozen=True)
class RunMetrics:
    total_cost: float
    peak_control: float
    min_margin: float
    actor_error: float
    safety_violated: bool
    final_norm: float = np.nan
    pe_min_eig: float = np.nan
    max_actor_norm: float = np.nan
    breach_time: float | None = None


def _barrier_or_inf(spec, x):
    return barrier.reciprocal_barrier(spec, x) if spec.is_interior(x) else np.inf


def _build_log(cfg, t, xs, us, uhats, ecs, Wcs, Was):
    norm_x = np.linalg.norm(xs, axis=1)
    return TrajectoryLog(
        t=t,
        x=xs,
        u=us,
        u_hat=uhats,
        norm_x=norm_x,
        barrier=np.array([_barrier_or_inf(cfg.spec, x) for x in xs]),
        td_error=ecs,
        margin=cfg.spec.c - norm_x,
        critic=Wcs,
        actor=Was,
    )


def compute_metrics(cfg, log, *, pe_min_eig=np.nan, breach_x=None, breach_t=None, oracle=None):
    sys = cfg.sys
    integrand = 0.5 * (
        np.einsum("ti,ij,tj->t", log.x, sys.M, log.x) + np.einsum("ti,ij,tj->t", log.u, sys.R, log.u)
    )
    total = float(np.trapezoid(integrand, log.t)) if len(log) > 1 else 0.0
    min_margin = float(log.margin.min())
    if breach_x is not None:
        min_margin = min(min_margin, cfg.spec.margin(breach_x))
    oracle = oracle if oracle is not None else solve_care(sys)
    Wa = oracle.Wa
    actor_error = float(np.linalg.norm(log.actor[-1] - Wa) / np.linalg.norm(Wa))
    return RunMetrics(
        total_cost=total,
        peak_control=float(np.linalg.norm(log.u, axis=1).max()),
        min_margin=min_margin,
        actor_error=actor_error,
        safety_violated=bool(min_margin < 0 or breach_x is not None),
        final_norm=float(log.norm_x[-1]) if breach_x is None else float(np.linalg.norm(breach_x)),
        pe_min_eig=pe_min_eig,
        max_actor_norm=float(np.linalg.norm(log.actor.reshape(len(log), -1), axis=1).max()),
        breach_time=breach_t,
    )


def _initial_weights(cfg):
    state = LearnerState.initial(cfg.sys, cfg.gains, cfg.integ.dt, cfg.Wc0, cfg.Wa0)
    return state


def _run_compiled(cfg, noise):
    sys, spec, gains, integ = cfg.sys, cfg.spec, cfg.gains, cfg.integ
    state = _initial_weights(cfg)
    out = _kernels.learning_episode(
        sys.A, sys.B, sys.M, sys.R, float(spec.c), float(spec.eps_interior), float(cfg.k_sb),
        float(gains.eta_c), float(gains.eta_a), float(gains.Wa_bound), float(integ.dt), integ.steps,
        gains.window_samples(integ.dt), cfg.x0, state.Wc_hat, state.Wa_hat,
        float(noise.amplitude), noise.frequencies, noise.phases, float(noise.t_off),
        integ.hold == "zoh", float(integ.cfl),
    )
    xs, us, uhats, ecs, Wcs, Was, pe, pe_count, status, breach_t, breach_x = out
    return xs, us, uhats, ecs, Wcs, Was, pe, pe_count, status, breach_t, breach_x


def _run_python(cfg, noise):
    """Reference loop assembled from the public module functions."""
    sys, spec, gains, integ = cfg.sys, cfg.spec, cfg.gains, cfg.integ
    k_sb = cfg.k_sb
    dt = integ.dt
    state = _initial_weights(cfg)
    p = qlearn.n_weights(sys.n, sys.m)
    limit = spec.c * _kernels.BREACH_FACTOR
    interior = spec.c - spec.eps_interior

    def inside(z):
        r = np.linalg.norm(z)
        return r < limit and (k_sb == 0.0 or r < interior)

    rec = {k: [] for k in ("x", "u", "uhat", "ec", "Wc", "Wa")}
    pe = np.zeros((p, p))
    pe_count = 0
    x = cfg.x0.copy()
    status, breach_t, breach_x = _kernels.OK, np.nan, np.full(sys.n, np.nan)
    for i in range(integ.steps + 1):
        t = i * dt
        Wa = state.Wa_hat.copy()
        uhat = safecontrol.safe_actor_control(Wa, k_sb, sys, spec, x)
        u = uhat + exploration_noise(noise, t)
        rec["x"].append(x)
        rec["u"].append(u)
        rec["uhat"].append(uhat)
        rec["Wc"].append(state.Wc_hat.copy())
        rec["Wa"].append(Wa)
        qlearn.learner_step(state, gains, t, x, uhat, dt, sys)
        rec["ec"].append(state.td_error)
        if state.psi is not None and t < noise.t_off:
            mvec = state.psi / (1.0 + state.psi @ state.psi)
            pe += np.outer(mvec, mvec)
            pe_count += 1
        if i == integ.steps:
            break
        if integ.hold == "zoh":
            u_held = u
            policy = lambda z, s: u_held  # noqa: E731
            stiffness = None
        else:
            policy = lambda z, s: safecontrol.safe_actor_control(Wa, k_sb, sys, spec, z) + exploration_noise(noise, s)  # noqa: E731

            def stiffness(z):
                return np.linalg.norm(safecontrol.closed_loop_jacobian(Wa, k_sb, sys, spec, z))

        x_new, ok = plant.integrate_interval(sys, x, t, policy, dt, stiffness, integ.cfl, inside)
        if not ok:
            status, breach_x = _kernels.BREACH, x_new
            breach_t = t  # approximate; the compiled path reports the substep time
            break
        if np.linalg.norm(x_new) > _kernels.DIVERGENCE_NORM:
            status = _kernels.DIVERGED
            break
        x = x_new
    return (np.array(rec["x"]), np.array(rec["u"]), np.array(rec["uhat"]), np.array(rec["ec"]),
            np.array(rec["Wc"]), np.array(rec["Wa"]), pe, pe_count, status, breach_t, breach_x)


def run_episode(cfg, engine="compiled", raise_on_breach=False, oracle=None):
    """Simulate one closed-loop learning episode and return ``(log, metrics)``.

    A breach of the safe set ends the episode early and is reported through
    ``metrics.safety_violated`` (or raised as :class:`SafetyBreach` when
    ``raise_on_breach``). Divergence beyond ``|x| > 1e6`` always raises.
    """
    noise = cfg.noise.with_phases(cfg.sys.m, cfg.seed)
    if engine == "compiled":
        out = _run_compiled(cfg, noise)
    elif engine == "python":
        out = _run_python(cfg, noise)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    xs, us, uhats, ecs, Wcs, Was, pe, pe_count, status, breach_t, breach_x = out
    if status == _kernels.DIVERGED:
        raise NumericalDivergence(f"|x| exceeded {_kernels.DIVERGENCE_NORM:g}")
    t = np.arange(xs.shape[0]) * cfg.integ.dt
    log = _build_log(cfg, t, xs, us, uhats, ecs, Wcs, Was)
    pe_min = float(np.linalg.eigvalsh(pe / pe_count)[0]) if pe_count else np.nan
    breached = status == _kernels.BREACH
    metrics = compute_metrics(
        cfg, log, pe_min_eig=pe_min,
        breach_x=breach_x if breached else None,
        breach_t=float(breach_t) if breached else None,
        oracle=oracle,
    )
    if breached and raise_on_breach:
        raise SafetyBreach(float(breach_t), breach_x)
    return log, metrics


def sweep_ksb(cfg, ksb_values, engine="compiled"):
    """One episode per safety gain with everything else (seed included) fixed."""
    values = list(ksb_values)
    if len(values) < 2:
        raise ValueError("a sweep needs at least two gains")
    oracle = solve_care(cfg.sys)
    return [(k, run_episode(cfg.with_ksb(k), engine=engine, oracle=oracle)[1]) for k in values]


def compare_baseline(cfg, engine="compiled"):
    """Proposed controller against unconstrained Q-learning (``k_sb = 0``), same noise."""
    oracle = solve_care(cfg.sys)
    proposed = run_episode(replace(cfg, baseline=False), engine=engine, oracle=oracle)
    base = run_episode(replace(cfg, baseline=True), engine=engine, oracle=oracle)
    return proposed, base


def td_oracle_config(cfg):
    """Ideal weights, frozen learning, no safety term, no noise, continuous feedback."""
    sol = solve_care(cfg.sys)
    return replace(
        cfg,
        gains=replace(cfg.gains, eta_c=0.0, eta_a=0.0, k_sb=0.0),
        integ=replace(cfg.integ, hold="continuous"),
        noise=replace(cfg.noise, amplitude=0.0),
        Wc0=sol.Wc,
        Wa0=sol.Wa,
    )


@dataclass
class OracleRun:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    nu: np.ndarray
    breached: bool

    @property
    def max_norm(self):
        return float(np.linalg.norm(self.x, axis=1).max())


def run_oracle_episode(sys, spec, x0, integ=None, solution=None):
    """Closed loop under the model-based KKT-optimal safe controller."""
    integ = integ or IntegratorConfig()
    solution = solution if solution is not None else solve_care(sys)
    x0 = check_vector(x0, "x0", sys.n)
    xs, us, nus, status = _kernels.oracle_episode(
        sys.A, sys.B, sys.R, solution.P, float(spec.c), float(spec.eps_interior), float(spec.gamma0),
        float(integ.dt), integ.steps, x0, float(integ.cfl),
    )
    t = np.arange(xs.shape[0]) * integ.dt
    return OracleRun(t=t, x=xs, u=us, nu=nus, breached=status == _kernels.BREACH)

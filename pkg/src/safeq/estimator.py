"""scikit-learn style wrappers around the learning and model-based controllers.

``fit`` consumes initial states rather than a labelled dataset, so these
estimators follow the estimator protocol (parameters, fitted attributes,
``predict``) without being usable inside supervised pipelines.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .barrier import BarrierSpec
from .harness import ExperimentConfig, NoiseSpec, run_episode
from .plant import IntegratorConfig
from .qlearn import LearnGains, extract_gain
from .riccati import benchmark_system, solve_care
from .safecontrol import optimal_safe_control, safe_actor_control


def _states(X, n):
    X = check_array(X, ensure_2d=False, dtype=float)
    X = np.atleast_2d(X)
    if X.shape[1] != n:
        raise ValueError(f"expected states with {n} components, got {X.shape[1]}")
    return X


class SafeQLearningController(BaseEstimator):
    """Model-free safe Q-learning controller.

    ``fit`` runs one learning episode from the given initial state and keeps
    the final critic and actor weights; ``predict`` evaluates the learned
    actor with the barrier correction at arbitrary states.
    """

    def __init__(self, system=None, c=1.5, gamma0=1.0, k_sb=0.2, eta_c=20.0, eta_a=0.05,
                 T=0.01, Wa_bound=50.0, dt=1e-3, t_end=20.0, noise_amplitude=1.0, seed=0,
                 engine="compiled"):
        self.system = system
        self.c = c
        self.gamma0 = gamma0
        self.k_sb = k_sb
        self.eta_c = eta_c
        self.eta_a = eta_a
        self.T = T
        self.Wa_bound = Wa_bound
        self.dt = dt
        self.t_end = t_end
        self.noise_amplitude = noise_amplitude
        self.seed = seed
        self.engine = engine

    def _config(self, x0):
        sys = self.system if self.system is not None else benchmark_system()
        return ExperimentConfig(
            sys=sys,
            spec=BarrierSpec(c=self.c, gamma0=self.gamma0),
            gains=LearnGains(eta_c=self.eta_c, eta_a=self.eta_a, Wa_bound=self.Wa_bound,
                             T=self.T, k_sb=self.k_sb),
            integ=IntegratorConfig(dt=self.dt, t_end=self.t_end),
            x0=x0,
            noise=NoiseSpec(amplitude=self.noise_amplitude),
            seed=self.seed,
        )

    def fit(self, X, y=None):
        """Learn from an episode started at ``X`` (a single state)."""
        sys = self.system if self.system is not None else benchmark_system()
        X = _states(X, sys.n)
        if X.shape[0] != 1:
            raise ValueError("fit takes exactly one initial state")
        self.config_ = self._config(X[0])
        self.log_, self.metrics_ = run_episode(self.config_, engine=self.engine)
        self.critic_weights_ = self.log_.critic[-1].copy()
        self.actor_weights_ = self.log_.actor[-1].copy()
        self.n_features_in_ = sys.n
        return self

    def critic_gain(self):
        """Feedback gain implied by the learned critic alone."""
        check_is_fitted(self)
        sys = self.config_.sys
        return extract_gain(self.critic_weights_, sys.n, sys.m, sys.R)

    def predict(self, X):
        check_is_fitted(self)
        cfg = self.config_
        X = _states(X, cfg.sys.n)
        return np.array([safe_actor_control(self.actor_weights_, cfg.k_sb, cfg.sys, cfg.spec, x) for x in X])


class KKTSafeController(BaseEstimator):
    """Model-based reference: LQR control minimally modified to satisfy the barrier condition."""

    def __init__(self, system=None, c=1.5, gamma0=1.0):
        self.system = system
        self.c = c
        self.gamma0 = gamma0

    def fit(self, X=None, y=None):
        """Solve the Riccati equation; ``X`` is accepted for API symmetry and ignored."""
        self.system_ = self.system if self.system is not None else benchmark_system()
        self.spec_ = BarrierSpec(c=self.c, gamma0=self.gamma0)
        self.solution_ = solve_care(self.system_)
        self.n_features_in_ = self.system_.n
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = _states(X, self.system_.n)
        return np.array([optimal_safe_control(self.system_, self.spec_, self.solution_.P, x) for x in X])


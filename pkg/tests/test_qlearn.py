import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from safeq import qlearn
from safeq.exceptions import InvariantViolation, NotWarmedUp
from safeq.qlearn import IntegralWindow, LearnerState, LearnGains


def symmetric(k):
    return arrays(float, (k, k), elements=st.floats(-5, 5)).map(lambda a: a + a.T)


class TestBasis:
    def test_unit_vector(self):
        np.testing.assert_array_equal(qlearn.quadratic_basis([1.0, 0.0, 0.0]), [1, 0, 0, 0, 0, 0])

    def test_products(self):
        np.testing.assert_array_equal(qlearn.quadratic_basis([1.0, 2.0, 3.0]), [1, 2, 3, 4, 6, 9])

    def test_count(self):
        assert qlearn.n_weights(2, 1) == 6
        assert qlearn.n_weights(3, 2) == 15


class TestVech:
    def test_identity(self):
        np.testing.assert_array_equal(qlearn.vech_weights(np.eye(3)), [0.5, 0, 0, 0.5, 0, 0.5])

    def test_off_diagonal(self):
        np.testing.assert_array_equal(qlearn.vech_weights([[0.0, 1.0], [1.0, 0.0]]), [0, 1, 0])

    def test_unvech_zero(self):
        np.testing.assert_array_equal(qlearn.unvech(np.zeros(6), 2, 1), np.zeros((3, 3)))

    def test_unvech_identity(self):
        np.testing.assert_array_equal(qlearn.unvech([0.5, 0, 0, 0.5, 0, 0.5], 2, 1), np.eye(3))

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 3).flatmap(lambda k: st.tuples(symmetric(k), arrays(float, (k,), elements=st.floats(-5, 5)))))
    def test_quadratic_form_identity(self, pair):
        Q, X = pair
        w = qlearn.vech_weights(Q)
        assert w @ qlearn.quadratic_basis(X) == pytest.approx(0.5 * X @ Q @ X, abs=1e-12 * max(1.0, np.abs(Q).max() * (X @ X)))

    def test_roundtrip_exact(self, rng):
        for _ in range(100):
            n, m = rng.integers(1, 4), rng.integers(1, 3)
            S = rng.normal(size=(n + m, n + m))
            Q = S + S.T
            np.testing.assert_array_equal(qlearn.unvech(qlearn.vech_weights(Q), n, m), Q)


class TestExtractGain:
    def test_true_weights(self, model, solution):
        Q21, Q22 = qlearn.extract_gain(solution.Wc, 2, 1, model.R)
        np.testing.assert_allclose(Q21, model.B.T @ solution.P, atol=1e-12)
        np.testing.assert_allclose(Q22, model.R, atol=1e-15)

    def test_guard(self, model):
        _, Q22 = qlearn.extract_gain(np.zeros(6), 2, 1, model.R)
        np.testing.assert_allclose(Q22, [[1e-7]], rtol=1e-12)

    def test_index_bookkeeping(self):
        w = np.arange(1.0, 7.0)  # (1,1) (1,2) (1,3) (2,2) (2,3) (3,3)
        Q21, Q22 = qlearn.extract_gain(w, 2, 1, np.eye(1))
        np.testing.assert_array_equal(Q21, [[3.0, 5.0]])
        np.testing.assert_array_equal(Q22, [[12.0]])


class TestGains:
    def test_negative_rejected(self):
        with pytest.raises(InvariantViolation):
            LearnGains(k_sb=-1.0)

    def test_warns_on_slow_critic(self):
        with pytest.warns(UserWarning):
            LearnGains(eta_c=0.1, eta_a=0.05)

    def test_default_does_not_warn(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            LearnGains()

    def test_window_samples(self):
        assert LearnGains().window_samples(1e-3) == 10
        with pytest.raises(InvariantViolation):
            LearnGains(T=0.0105).window_samples(1e-3)


class TestWindow:
    @staticmethod
    def fill(samples, dt=1e-3, intervals=10):
        window = IntegralWindow(intervals, dt)
        for i, value in enumerate(samples):
            window.push(i * dt, None, value)
        return window

    def test_constant(self):
        assert self.fill([2.5] * 11).integral() == pytest.approx(2.5 * 0.01, abs=1e-12)

    def test_linear(self):
        t = np.arange(11) * 1e-3
        assert self.fill(t).integral() == pytest.approx(0.5 * 0.01**2, abs=1e-12)

    def test_sine(self):
        t0 = 0.3
        t = t0 + np.arange(11) * 1e-3
        exact = np.cos(t0) - np.cos(t0 + 0.01)
        assert abs(self.fill(np.sin(t)).integral() - exact) <= 1e-9

    def test_slides(self):
        window = self.fill(list(range(15)))
        assert len(window) == 11
        assert window.oldest[2] == 4 and window.newest[2] == 14

    def test_cold(self):
        with pytest.raises(NotWarmedUp):
            self.fill([1.0] * 5).integral()

    def test_uneven_spacing(self):
        window = IntegralWindow(10, 1e-3)
        window.push(0.0, None, 0.0)
        with pytest.raises(ValueError):
            window.push(0.002, None, 0.0)

    def test_push_and_integrate(self, model):
        state = LearnerState.initial(model, LearnGains(), 1e-3)
        X = np.array([1.0, 2.0, 3.0])
        for i in range(10):
            with pytest.raises(NotWarmedUp):
                qlearn.window_push_and_integrate(state, i * 1e-3, X, 1.0)
        assert qlearn.window_push_and_integrate(state, 0.01, X, 1.0) == pytest.approx(0.01)
        np.testing.assert_array_equal(state.window.newest[1], [1, 2, 3, 4, 6, 9])


class TestTdError:
    def test_zero(self, model):
        state = LearnerState(np.zeros(6), np.zeros((2, 1)), None)
        e, _ = qlearn.td_error(state, np.ones(6), np.zeros(6), 0.0)
        assert e == 0.0

    def test_no_motion(self, model):
        state = LearnerState(np.arange(6.0), np.zeros((2, 1)), None)
        e, psi = qlearn.td_error(state, np.ones(6), np.ones(6), 0.7)
        assert e == 0.7
        np.testing.assert_array_equal(psi, np.zeros(6))


class TestUpdateLaws:
    def test_critic_zero_error(self):
        np.testing.assert_array_equal(qlearn.critic_derivative(0.0, np.ones(6), 20.0), np.zeros(6))

    def test_critic_zero_regressor(self):
        np.testing.assert_array_equal(qlearn.critic_derivative(1.0, np.zeros(6), 20.0), np.zeros(6))

    def test_critic_unit(self):
        np.testing.assert_allclose(qlearn.critic_derivative(1.0, np.eye(6)[0], 20.0), -5.0 * np.eye(6)[0])

    @settings(max_examples=300, deadline=None)
    @given(arrays(float, (6,), elements=st.floats(-1e3, 1e3)))
    def test_normalised_regressor_bound(self, psi):
        assert np.linalg.norm(psi / (1.0 + psi @ psi)) <= 0.5 + 1e-15

    def test_actor_fixed_point(self, model, solution):
        Q21, Q22 = qlearn.extract_gain(solution.Wc, 2, 1, model.R)
        Wa = -np.linalg.solve(Q22, Q21).T
        np.testing.assert_allclose(qlearn.actor_derivative(Wa, Q21, Q22, 0.05, 50.0), 0.0, atol=1e-15)

    def test_actor_interior_unprojected(self):
        Wa = np.array([[1.0], [2.0]])
        Q21, Q22 = np.array([[1.0, 1.0]]), np.array([[0.5]])
        expected = -0.05 * (Q21.T / 0.5 + Wa)
        np.testing.assert_allclose(qlearn.actor_derivative(Wa, Q21, Q22, 0.05, 50.0), expected)

    def test_actor_projection_tangential(self):
        Wa = np.array([[30.0], [40.0]])  # on the sphere of radius 50
        Q21, Q22 = np.array([[-60.0, -80.0]]), np.array([[1.0]])  # pulls radially outward
        d = qlearn.actor_derivative(Wa, Q21, Q22, 0.05, 50.0)
        assert abs(np.sum(d * Wa)) <= 1e-12

    def test_actor_inward_kept_on_sphere(self):
        Wa = np.array([[30.0], [40.0]])
        Q21, Q22 = np.array([[3.0, 4.0]]), np.array([[1.0]])
        expected = -0.05 * (Q21.T + Wa)
        np.testing.assert_allclose(qlearn.actor_derivative(Wa, Q21, Q22, 0.05, 50.0), expected)


class TestLearnerStep:
    def run(self, model, gains, Wc0=None, Wa0=None, steps=40):
        state = LearnerState.initial(model, gains, 1e-3, Wc0, Wa0)
        rng = np.random.default_rng(0)
        for i in range(steps):
            x = rng.normal(size=2)
            u = rng.normal(size=1)
            qlearn.learner_step(state, gains, i * 1e-3, x, u, 1e-3, model)
        return state

    def test_zero_gains_freeze(self, model):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            gains = LearnGains(eta_c=0.0, eta_a=0.0)
        state = self.run(model, gains)
        np.testing.assert_array_equal(state.Wc_hat, qlearn.initial_critic_weights(model.R, 2))
        np.testing.assert_array_equal(state.Wa_hat, np.zeros((2, 1)))
        assert np.isfinite(state.td_error)

    def test_cold_window_skips(self, model):
        state = self.run(model, LearnGains(), steps=10)
        assert np.isnan(state.td_error)
        np.testing.assert_array_equal(state.Wa_hat, np.zeros((2, 1)))

    def test_equilibrium(self, model):
        # zero state and control: no TD error, and the initial actor is consistent with Wc0 = 0
        gains = LearnGains()
        state = LearnerState.initial(model, gains, 1e-3, np.zeros(6), np.zeros((2, 1)))
        for i in range(30):
            qlearn.learner_step(state, gains, i * 1e-3, np.zeros(2), np.zeros(1), 1e-3, model)
        np.testing.assert_array_equal(state.Wc_hat, np.zeros(6))
        np.testing.assert_array_equal(state.Wa_hat, np.zeros((2, 1)))

    def test_projection_invariant(self, model):
        gains = LearnGains(eta_a=5.0, eta_c=100.0, Wa_bound=1.0)
        state = LearnerState.initial(model, gains, 1e-3, Wc0=np.array([0, 0, 50.0, 0, 50.0, 0.05]))
        rng = np.random.default_rng(1)
        for i in range(2000):
            qlearn.learner_step(state, gains, i * 1e-3, rng.normal(size=2), rng.normal(size=1), 1e-3, model)
            assert np.linalg.norm(state.Wa_hat) <= 1.0 * (1 + 1e-12)
        assert np.linalg.norm(state.Wa_hat) == pytest.approx(1.0)

import numpy as np
import pytest

from safeq import barrier, safecontrol
from safeq.riccati import SystemModel, solve_care

from oracles import projection_oracle


def interior_states(rng, spec, count, min_margin=0.05):
    out = []
    while len(out) < count:
        x = rng.uniform(-spec.c, spec.c, size=2)
        if spec.margin(x) >= min_margin:
            out.append(x)
    return out


class TestSafeActorControl:
    def test_origin(self, model, spec):
        u = safecontrol.safe_actor_control(np.ones((2, 1)), 0.2, model, spec, [0.0, 0.0])
        np.testing.assert_array_equal(u, [0.0])

    def test_without_safety_term(self, model, spec):
        Wa = np.array([[-1.0], [-2.0]])
        u = safecontrol.safe_actor_control(Wa, 0.0, model, spec, [0.3, 0.4])
        np.testing.assert_allclose(u, [-1.1])

    def test_gradient_orthogonal_to_input(self, model, spec):
        u = safecontrol.safe_actor_control(np.zeros((2, 1)), 0.2, model, spec, [0.75, 0.0])
        np.testing.assert_array_equal(u, [0.0])

    def test_barrier_term(self, model, spec):
        x = np.array([1.0, 1.0])
        u = safecontrol.safe_actor_control(np.zeros((2, 1)), 0.2, model, spec, x)
        # -0.2 * (1/0.1) * 1152
        assert u[0] == pytest.approx(-2304.0, rel=1e-12)


class TestKkt:
    def test_origin_is_degenerate(self, model, spec, solution):
        diag = safecontrol.kkt_multiplier(model, spec, solution.P, [0.0, 0.0])
        assert diag.nu_star == 0.0 and not diag.active

    def test_feasible_optimum_untouched(self, model, spec, solution, rng):
        checked = 0
        for x in interior_states(rng, spec, 500):
            u0 = -np.linalg.solve(model.R, model.B.T @ (solution.P @ x))
            if barrier.constraint_residual(spec, model, x, u0) <= 0:
                checked += 1
                assert safecontrol.kkt_multiplier(model, spec, solution.P, x).nu_star == 0.0
                np.testing.assert_array_equal(safecontrol.optimal_safe_control(model, spec, solution.P, x), u0)
        assert checked > 100

    def test_active_near_boundary(self, model, spec, solution):
        # the optimal gain leaves this direction drifting outward
        x = 1.3 * np.array([np.cos(2.88), np.sin(2.88)])
        diag = safecontrol.kkt_multiplier(model, spec, solution.P, x)
        assert diag.active and diag.nu_star > 0
        u = safecontrol.optimal_safe_control(model, spec, solution.P, x)
        assert abs(barrier.constraint_residual(spec, model, x, u)) <= 1e-9 * max(1.0, np.sqrt(diag.R_b) * abs(u[0]))

    def test_matches_projection_oracle(self, model, spec, solution, rng):
        active = 0
        for x in interior_states(rng, spec, 2000):
            u = safecontrol.optimal_safe_control(model, spec, solution.P, x)
            oracle = projection_oracle(model, spec, solution.P, x)
            np.testing.assert_allclose(u, oracle, rtol=1e-9, atol=1e-9)
            diag = safecontrol.kkt_multiplier(model, spec, solution.P, x)
            active += diag.active
            assert abs(diag.nu_star * barrier.constraint_residual(spec, model, x, u)) <= 1e-9
        assert active > 0

    def test_two_input_plant(self, spec, rng):
        model = SystemModel(A=[[0.2, 1.0], [0.5, -0.3]], B=[[1.0, 0.0], [0.3, 1.0]], M=np.eye(2),
                            R=[[0.5, 0.1], [0.1, 0.2]])
        P = solve_care(model).P
        for x in interior_states(rng, spec, 300):
            np.testing.assert_allclose(safecontrol.optimal_safe_control(model, spec, P, x),
                                       projection_oracle(model, spec, P, x), rtol=1e-9, atol=1e-9)


def test_certainty_equivalence_gap(model, spec, solution, rng):
    for x in interior_states(rng, spec, 300):
        if safecontrol.kkt_multiplier(model, spec, solution.P, x).active:
            continue
        gap = (safecontrol.safe_actor_control(solution.Wa, 0.2, model, spec, x)
               - safecontrol.optimal_safe_control(model, spec, solution.P, x))
        expected = -0.2 * np.linalg.solve(model.R, model.B.T @ barrier.reciprocal_barrier_grad(spec, x))
        np.testing.assert_allclose(gap, expected, rtol=1e-12, atol=1e-12)


def test_closed_loop_jacobian_matches_differences(model, spec):
    Wa = np.array([[-2.0], [-3.0]])
    x = np.array([0.7, -0.4])
    J = safecontrol.closed_loop_jacobian(Wa, 0.2, model, spec, x)

    def field(z):
        return model.A @ z + model.B @ safecontrol.safe_actor_control(Wa, 0.2, model, spec, z)

    h = 1e-6
    fd = np.column_stack([(field(x + h * e) - field(x - h * e)) / (2 * h) for e in np.eye(2)])
    np.testing.assert_allclose(J, fd, rtol=1e-6, atol=1e-6)

import warnings
from dataclasses import replace

import numpy as np
import pytest

from safeq.exceptions import InvariantViolation, SafetyBreach
from safeq.harness import (
    REFERENCE_KSB,
    REFERENCE_TABLE,
    ExperimentConfig,
    NoiseSpec,
    compare_baseline,
    exploration_noise,
    run_episode,
    run_oracle_episode,
    sweep_ksb,
    td_oracle_config,
)
from safeq.plant import IntegratorConfig
from safeq.qlearn import LearnGains


def short(cfg, t_end=0.5):
    return replace(cfg, integ=replace(cfg.integ, t_end=t_end))


def frozen_gains(**kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return LearnGains(eta_c=0.0, eta_a=0.0, **kwargs)


class TestNoise:
    def test_frequencies(self):
        w = NoiseSpec().frequencies
        assert w.size == 10 and w[0] == pytest.approx(0.5) and w[-1] == pytest.approx(50.0)
        assert np.all(np.diff(np.log(w)) == pytest.approx(np.log(100) / 9))

    def test_switched_off(self):
        noise = NoiseSpec().with_phases(1, 0)
        np.testing.assert_array_equal(exploration_noise(noise, 10.0), [0.0])
        np.testing.assert_array_equal(exploration_noise(noise, 15.0), [0.0])

    def test_zero_amplitude(self):
        noise = NoiseSpec(amplitude=0.0).with_phases(1, 0)
        np.testing.assert_array_equal(exploration_noise(noise, 1.0), [0.0])

    def test_deterministic(self):
        a = exploration_noise(NoiseSpec().with_phases(2, 7), 1.234)
        b = exploration_noise(NoiseSpec().with_phases(2, 7), 1.234)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, exploration_noise(NoiseSpec().with_phases(2, 8), 1.234))

    def test_phases_required(self):
        with pytest.raises(ValueError):
            exploration_noise(NoiseSpec(), 0.0)

    @pytest.mark.parametrize("kwargs", [{"amplitude": -1.0}, {"num_tones": 0}, {"freq_lo": 2.0, "freq_hi": 1.0}])
    def test_invariants(self, kwargs):
        with pytest.raises(InvariantViolation):
            NoiseSpec(**kwargs)


class TestConfig:
    def test_x0_must_be_interior(self):
        with pytest.raises(InvariantViolation):
            ExperimentConfig(x0=[1.5, 0.0])

    def test_window_alignment(self):
        with pytest.raises(InvariantViolation):
            ExperimentConfig(gains=LearnGains(T=0.0105))

    def test_baseline_disables_safety(self, cfg):
        assert cfg.k_sb == 0.2
        assert replace(cfg, baseline=True).k_sb == 0.0


class TestEpisode:
    def test_log_shape(self, cfg):
        log, met = run_episode(short(cfg))
        assert len(log) == 501
        np.testing.assert_allclose(np.diff(log.t), 1e-3, rtol=1e-9)
        assert log.critic.shape == (501, 6) and log.actor.shape == (501, 2, 1)
        assert met.total_cost >= 0 and met.peak_control >= 0
        assert np.all(np.isnan(log.td_error[:10])) and np.all(np.isfinite(log.td_error[10:]))

    def test_equilibrium(self, cfg):
        log, met = run_episode(replace(short(cfg, 1.0), x0=[0.0, 0.0], noise=NoiseSpec(amplitude=0.0)))
        np.testing.assert_array_equal(log.x, 0.0)
        assert met.total_cost == 0.0

    def test_oracle_actor_with_barrier_regulates(self, cfg, solution):
        run = replace(cfg, gains=frozen_gains(k_sb=0.2), noise=NoiseSpec(amplitude=0.0),
                      Wc0=solution.Wc, Wa0=solution.Wa)
        _, met = run_episode(run)
        assert met.min_margin > 0
        assert met.final_norm < 1e-3

    def test_engines_agree(self, cfg):
        run = short(cfg, 0.3)
        a, ma = run_episode(run, engine="compiled")
        b, mb = run_episode(run, engine="python")
        for name in ("x", "u", "critic", "actor"):
            np.testing.assert_allclose(getattr(a, name), getattr(b, name), rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(a.td_error, b.td_error, rtol=1e-9, atol=1e-12, equal_nan=True)
        assert ma.total_cost == pytest.approx(mb.total_cost, rel=1e-10)

    def test_engines_agree_with_zoh(self, cfg):
        run = replace(short(cfg, 0.2), x0=[0.3, -0.2], integ=IntegratorConfig(t_end=0.2, hold="zoh"))
        a, _ = run_episode(run, engine="compiled")
        b, _ = run_episode(run, engine="python")
        np.testing.assert_allclose(a.x, b.x, rtol=1e-10, atol=1e-12)

    def test_deterministic(self, cfg):
        a, _ = run_episode(short(cfg))
        b, _ = run_episode(short(cfg))
        for name in ("x", "u", "u_hat", "critic", "actor"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))

    def test_projection_bound_respected(self, cfg):
        log, met = run_episode(cfg)
        assert np.linalg.norm(log.actor, axis=(1, 2)).max() <= cfg.gains.Wa_bound * (1 + 1e-12)
        assert np.all(np.isfinite(log.critic))

    def test_default_scenario_is_safe(self, cfg):
        _, met = run_episode(cfg)
        assert not met.safety_violated and met.min_margin >= 0

    def test_unknown_engine(self, cfg):
        with pytest.raises(ValueError):
            run_episode(short(cfg), engine="gpu")


class TestBaseline:
    def test_unconstrained_learning_breaches(self, cfg):
        _, met = run_episode(replace(cfg, baseline=True))
        assert met.safety_violated and met.breach_time is not None

    def test_raise_on_breach(self, cfg):
        with pytest.raises(SafetyBreach):
            run_episode(replace(cfg, baseline=True), raise_on_breach=True)

    def test_compare(self, cfg):
        (_, proposed), (_, base) = compare_baseline(cfg)
        assert proposed.min_margin >= 0
        assert base.min_margin <= proposed.min_margin

    def test_compare_degenerate(self, cfg):
        (_, proposed), (_, base) = compare_baseline(short(cfg.with_ksb(0.0), 0.3))
        assert proposed == base


class TestSweep:
    def test_reference_table(self):
        assert REFERENCE_KSB == (0.01, 0.1, 0.2, 0.3, 0.5)
        assert REFERENCE_TABLE[2] == (0.2, 40.021, 18.39)

    def test_rows(self, cfg):
        rows = sweep_ksb(short(cfg, 0.5), [0.1, 0.2])
        assert [k for k, _ in rows] == [0.1, 0.2]

    def test_needs_two_gains(self, cfg):
        with pytest.raises(ValueError):
            sweep_ksb(cfg, [0.2])


def test_td_oracle_config(cfg, solution):
    run = td_oracle_config(cfg)
    assert run.k_sb == 0.0 and run.noise.amplitude == 0.0
    np.testing.assert_array_equal(run.Wa0, solution.Wa)


def test_oracle_episode_stays_safe(model, spec):
    run = run_oracle_episode(model, spec, [1.0, 1.0], IntegratorConfig(t_end=5.0))
    assert not run.breached
    assert run.max_norm < spec.c
    assert np.all(run.nu >= 0)

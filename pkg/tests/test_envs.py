# tests/test_envs.py
from __future__ import annotations

import numpy as np
import pytest

from app.domain.errors import ConfigError, DimensionError
from app.domain.types import Zonotope
from app.application.envs.base import validate_invariance
from app.application.envs.pendulum import PendulumEnv, angle_normalize, pendulum_reward
from app.application.envs.quadrotor import X_STAR, QuadrotorEnv
from app.application.envs.registry import make_env
from app.application.safety.projection import is_member, project_or_raise
from app.application.safety.zonotope import contains_point
from app.infrastructure.sets_fs import load_env_constants


def test_registry_unknown_env():
    with pytest.raises(ConfigError):
        make_env("cartpole")
    assert make_env("pendulum") is make_env("pendulum")


# ------------------------------
# péndulo
# ------------------------------
def test_pendulum_euler_step_and_reward():
    env = PendulumEnv.default()
    s = env.make_state([0.2, -0.1])
    res = env.step(s, [1.0])
    th_dd = 10.0 * np.sin(0.2) + 1.0
    assert np.allclose(res.next_state.x, [0.2 + 0.05 * -0.1, -0.1 + 0.05 * th_dd])
    assert res.reward == pytest.approx(-(0.04 + 0.1 * 0.01 + 0.001))
    assert not res.done and res.next_state.t == 1


def test_pendulum_clips_torque_and_checks_dimension():
    env = PendulumEnv.default()
    s = env.make_state([0.0, 0.0])
    assert env.step(s, [50.0]).info.applied_action[0] == 8.0
    with pytest.raises(DimensionError):
        env.step(s, [1.0, 2.0])


def test_pendulum_reward_wraps_angle():
    assert angle_normalize(2.0 * np.pi + 0.1) == pytest.approx(0.1)
    assert pendulum_reward(2.0 * np.pi, 0.0, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_pendulum_horizon_ends_episode():
    env = PendulumEnv.default()
    s = env.make_state([0.0, 0.0], t=env.horizon - 1)
    res = env.step(s, [0.0])
    assert res.done and res.info.outcome == "horizon"


def test_pendulum_reset_is_inside_safe_set():
    env = PendulumEnv.default()
    for seed in range(20):
        s = env.reset(seed)
        assert contains_point(env.x_safe, s.x)
    assert np.array_equal(env.reset(7).x, env.reset(7).x)


def test_pendulum_full_box_at_origin():
    env = PendulumEnv.default()
    s = env.make_state([0.0, 0.0])
    ss = env.safe_action_set(s)
    assert is_member(ss, [8.0], s.x) and is_member(ss, [-8.0], s.x)


def test_safe_actions_keep_pendulum_inside(rng):
    env = PendulumEnv.default()
    for seed in range(10):
        s = env.reset(seed)
        for _ in range(30):
            ss = env.safe_action_set(s)
            u = project_or_raise(ss, s.x, rng.uniform(-8.0, 8.0, size=1)).u_phi
            s = env.step(s, u).next_state
            assert contains_point(env.x_safe, s.x, tol=1e-6)


def test_validate_invariance_rejects_large_set():
    env = PendulumEnv.default()
    big = Zonotope.box([-3.0, -3.0], [3.0, 3.0])
    with pytest.raises(ConfigError):
        validate_invariance(env, big, env.make_state, n_random=4)


def test_missing_constant_is_config_error():
    cfg = load_env_constants("pendulum")
    del cfg["max_torque"]
    with pytest.raises(ConfigError):
        PendulumEnv(cfg, validate=False)


# ------------------------------
# cuadricóptero
# ------------------------------
def test_quadrotor_hover_is_equilibrium():
    env = QuadrotorEnv.default()
    d = env.dynamics()
    u_h = np.full(2, env.u_hover)
    assert env.u_hover == pytest.approx(9.81 / 1.2)
    assert np.allclose(d.A @ X_STAR + d.B @ u_h + d.c, X_STAR)


def test_quadrotor_reward_at_target():
    env = QuadrotorEnv.default()
    u = env.action_low.copy()
    assert env.reward(X_STAR, u) == pytest.approx(0.0)
    assert env.reward(X_STAR + np.array([1.0, 0, 0, 0, 0, 0]), u) < 0.0


def test_quadrotor_step_uses_episode_rng():
    env = QuadrotorEnv.default()
    a = env.step(env.reset(3), [8.0, 8.0])
    b = env.step(env.reset(3), [8.0, 8.0])
    assert np.array_equal(a.next_state.x, b.next_state.x)


def test_quadrotor_safe_set_at_hover():
    env = QuadrotorEnv.default()
    s = env.make_state(X_STAR.copy())
    ss = env.safe_action_set(s)
    assert is_member(ss, [env.u_hover, env.u_hover], s.x)
    # gran diferencia de empuje: par de giro inadmisible
    assert not is_member(ss, [5.0, 11.5], s.x)


def test_quadrotor_observation_is_relative():
    env = QuadrotorEnv.default()
    s = env.make_state(X_STAR.copy())
    assert np.allclose(env.observe(s), 0.0)

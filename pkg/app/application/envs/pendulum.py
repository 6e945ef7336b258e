# app/application/envs/pendulum.py
"""
Péndulo invertido, x = (theta, theta_dot), theta = 0 arriba.

    theta_ddot = (g/l) sin(theta) + u / (m l^2)      (Euler explícito)
    r = -(theta^2 + 0.1 theta_dot^2 + 0.001 u^2)
"""
from __future__ import annotations

from functools import lru_cache
from typing import Optional

import numpy as np

from app.domain.types import AffineDynamics, EnvState, SafeActionSet, StepResult, Zonotope
from app.infrastructure.sets_fs import load_env_constants, load_safe_set
from app.application.envs.base import Env, require, validate_once


def angle_normalize(th: float) -> float:
    return float(((th + np.pi) % (2.0 * np.pi)) - np.pi)


def pendulum_reward(theta: float, theta_dot: float, u: float) -> float:
    th = angle_normalize(theta)
    return -(th * th + 0.1 * theta_dot * theta_dot + 0.001 * u * u)


class PendulumEnv(Env):
    name = "pendulum"
    obs_dim = 2
    action_dim = 1

    def __init__(self, constants: Optional[dict] = None, validate: bool = True) -> None:
        cfg = constants if constants is not None else load_env_constants(self.name)
        self.constants = dict(cfg)
        self.g = require(cfg, "g", self.name)
        self.m = require(cfg, "m", self.name)
        self.l = require(cfg, "l", self.name)
        self.dt = require(cfg, "dt", self.name)
        self.horizon = require(cfg, "horizon", self.name, int)
        u_max = require(cfg, "max_torque", self.name)
        self.action_low = np.array([-u_max])
        self.action_high = np.array([u_max])
        self.reset_scale = float(cfg.get("reset_scale", 0.9))
        self.x_safe: Zonotope = load_safe_set(require(cfg, "safe_set", self.name, str))
        # sin perturbación: el alcanzable es un punto
        self.disturbance = Zonotope.point([0.0])
        if validate:
            validate_once(self, self.x_safe, self.make_state)

    @classmethod
    def default(cls) -> "PendulumEnv":
        return _default_env()

    # ------------------------------
    # dinámica
    # ------------------------------
    def _drift(self, x: np.ndarray) -> np.ndarray:
        return np.array([x[1], (self.g / self.l) * np.sin(x[0])])

    def _input_gain(self) -> float:
        return 1.0 / (self.m * self.l * self.l)

    def dynamics(self, x: np.ndarray) -> AffineDynamics:
        """Paso Euler afín en u alrededor del estado actual (exacto para el paso)."""
        B = np.array([[0.0], [self.dt * self._input_gain()]])
        return AffineDynamics(A=np.eye(2), B=B, c=self.dt * self._drift(x), E=np.zeros((2, 1)))

    def step(self, s: EnvState, u) -> StepResult:
        u = self.clip_action(u)
        x = s.x
        x_next = np.array([
            x[0] + self.dt * x[1],
            x[1] + self.dt * ((self.g / self.l) * np.sin(x[0]) + self._input_gain() * u[0]),
        ])
        r = pendulum_reward(x[0], x[1], u[0])
        t = s.t + 1
        done = t >= self.horizon
        s_next = EnvState(x=x_next, t=t, rng=s.rng, extras=s.extras)
        return self._result(s_next, r, done, u, "horizon" if done else "ok")

    def reset(self, seed: int) -> EnvState:
        rng = np.random.default_rng(seed)
        beta = rng.uniform(-self.reset_scale, self.reset_scale, size=self.x_safe.n_generators)
        x0 = self.x_safe.center + self.x_safe.generators @ beta
        return EnvState(x=x0, t=0, rng=rng)

    def safe_action_set(self, s: EnvState) -> SafeActionSet:
        return SafeActionSet.reach(
            s.x, self.dynamics(s.x), self.disturbance, self.x_safe, self.action_low, self.action_high
        )

    def observe(self, s: EnvState) -> np.ndarray:
        return s.x.copy()

    def return_proxy(self, s: EnvState, u) -> float:
        """-1/2 (theta_dot' / ganancia)^2: cuadrático en u con óptimo donde theta_dot' = 0."""
        u = self.check_action(u)
        gain = self.dt * self._input_gain()
        w_next = s.x[1] + self.dt * (self.g / self.l) * np.sin(s.x[0]) + gain * u[0]
        return float(-0.5 * (w_next / gain) ** 2)


@lru_cache(maxsize=None)
def _default_env() -> PendulumEnv:
    return PendulumEnv()


def pendulum_step(s: EnvState, u, env: Optional[PendulumEnv] = None) -> StepResult:
    return (env or _default_env()).step(s, u)

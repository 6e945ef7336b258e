# app/application/envs/quadrotor.py
"""
Cuadricóptero en el plano x-z, linealizado en el equilibrio de vuelo
estacionario y discretizado con Euler explícito.

x = (e_x, e_z, de_x, de_z, theta, dtheta),  x* = (0, 1, 0, 0, 0, 0)
u = (u1, u2) empujes; hover u_h = g / (2K) en ambos motores.

    dde_x  = g theta + w1
    dde_z  = K (u1 + u2 - 2 u_h) + w2
    ddtheta = -d0 theta - d1 dtheta + n0 (u2 - u1)

r = -1 + exp(-||(e_x, e_z) - (0, 1)|| - 0.005 ||(u - u_low) / (u_high - u_low)||_1)
"""
from __future__ import annotations

from functools import lru_cache
from typing import Optional

import numpy as np

from app.domain.types import AffineDynamics, EnvState, SafeActionSet, StepResult, Zonotope
from app.infrastructure.sets_fs import load_env_constants, load_safe_set
from app.application.envs.base import Env, require, validate_once

X_STAR = np.array([0.0, 1.0, 0.0, 0.0, 0.0, 0.0])


class QuadrotorEnv(Env):
    name = "quadrotor"
    obs_dim = 6
    action_dim = 2

    def __init__(self, constants: Optional[dict] = None, validate: bool = True) -> None:
        cfg = constants if constants is not None else load_env_constants(self.name)
        self.constants = dict(cfg)
        self.g = require(cfg, "g", self.name)
        self.K = require(cfg, "K", self.name)
        self.d0 = require(cfg, "d0", self.name)
        self.d1 = require(cfg, "d1", self.name)
        self.n0 = require(cfg, "n0", self.name)
        self.dt = require(cfg, "dt", self.name)
        self.horizon = require(cfg, "horizon", self.name, int)
        self.action_low = np.asarray(require(cfg, "u_low", self.name, None), dtype=np.float64)
        self.action_high = np.asarray(require(cfg, "u_high", self.name, None), dtype=np.float64)
        self.w_max = require(cfg, "disturbance", self.name)
        self.reset_scale = float(cfg.get("reset_scale", 0.5))
        self.x_safe: Zonotope = load_safe_set(require(cfg, "safe_set", self.name, str))
        self.disturbance = Zonotope.box([-self.w_max] * 2, [self.w_max] * 2)
        self.u_hover = self.g / (2.0 * self.K)

        dt = self.dt
        Ac = np.zeros((6, 6))
        Ac[0, 2] = 1.0
        Ac[1, 3] = 1.0
        Ac[2, 4] = self.g
        Ac[4, 5] = 1.0
        Ac[5, 4] = -self.d0
        Ac[5, 5] = -self.d1
        Bc = np.zeros((6, 2))
        Bc[3] = [self.K, self.K]
        Bc[5] = [-self.n0, self.n0]
        E = np.zeros((6, 2))
        E[2, 0] = dt
        E[3, 1] = dt
        A = np.eye(6) + dt * Ac
        B = dt * Bc
        c = -dt * (Ac @ X_STAR) - dt * (Bc @ np.full(2, self.u_hover))
        self._dyn = AffineDynamics(A=A, B=B, c=c, E=E)

        if validate:
            validate_once(self, self.x_safe, self.make_state)

    @classmethod
    def default(cls) -> "QuadrotorEnv":
        return _default_env()

    def dynamics(self, x: Optional[np.ndarray] = None) -> AffineDynamics:
        return self._dyn

    def reward(self, x_next: np.ndarray, u: np.ndarray) -> float:
        dist = float(np.linalg.norm(x_next[:2] - X_STAR[:2]))
        un = (u - self.action_low) / (self.action_high - self.action_low)
        return float(-1.0 + np.exp(-dist - 0.005 * np.sum(np.abs(un))))

    def step(self, s: EnvState, u) -> StepResult:
        u = self.clip_action(u)
        # la perturbación se muestrea siempre: mismo consumo de RNG en todos los wirings
        w = s.rng.uniform(-self.w_max, self.w_max, size=2)
        d = self._dyn
        x_next = d.A @ s.x + d.B @ u + d.c + d.E @ w
        r = self.reward(x_next, u)
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
            s.x, self._dyn, self.disturbance, self.x_safe, self.action_low, self.action_high
        )

    def observe(self, s: EnvState) -> np.ndarray:
        return s.x - X_STAR

    def return_proxy(self, s: EnvState, u) -> float:
        """
        -1/2 [(de_z' / (dt K))^2 + (dtheta' / (dt n0))^2] sin perturbación;
        en u es -||u - u*||^2 con u* el empuje que anula ambas velocidades.
        """
        u = self.check_action(u)
        d = self._dyn
        x_next = d.A @ s.x + d.B @ u + d.c
        a = x_next[3] / (self.dt * self.K)
        b = x_next[5] / (self.dt * self.n0)
        return float(-0.5 * (a * a + b * b))


@lru_cache(maxsize=None)
def _default_env() -> QuadrotorEnv:
    return QuadrotorEnv()


def quadrotor_step(s: EnvState, u, env: Optional[QuadrotorEnv] = None) -> StepResult:
    return (env or _default_env()).step(s, u)

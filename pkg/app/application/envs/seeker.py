# app/application/envs/seeker.py
"""
Seeker: doble integrador plano que debe llegar a una meta esquivando
obstáculos circulares.

x = (e_x, e_y, v_x, v_y);  e' = e + dt v,  v' = v + dt u,  |u|_inf <= a_max
r = -1 + exp(-||e' - e_goal||)

Conjunto seguro (modo directo): la mayor caja de aceleraciones, recortada
lado a lado hacia la acción de frenado, tal que la trayectoria "aplicar u
un paso y después frenar al máximo por eje" no entra en ningún obstáculo
inflado ni sale del mapa dentro del horizonte del episodio.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from app.core.constants import RESET_MAX_TRIES
from app.domain.errors import EmptySafeSet, SamplingBudgetExceeded
from app.domain.types import EnvState, SafeActionSet, StepResult, Zonotope
from app.infrastructure.sets_fs import load_env_constants
from app.application.envs.base import Env, require


def segment_point_distance(a: np.ndarray, b: np.ndarray, p: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0.0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(a + t * ab - p))


class SeekerEnv(Env):
    name = "seeker"
    action_dim = 2

    def __init__(self, constants: Optional[dict] = None, validate: bool = True) -> None:
        cfg = constants if constants is not None else load_env_constants(self.name)
        self.constants = dict(cfg)
        self.dt = require(cfg, "dt", self.name)
        self.horizon = require(cfg, "horizon", self.name, int)
        self.half_width = require(cfg, "map_half_width", self.name)
        self.goal_radius = require(cfg, "goal_radius", self.name)
        r_lo, r_hi = require(cfg, "obstacle_radius", self.name, None)
        self.radius_range = (float(r_lo), float(r_hi))
        self.n_obstacles = require(cfg, "n_obstacles", self.name, int)
        self.a_max = require(cfg, "a_max", self.name)
        self.margin = require(cfg, "margin", self.name)
        self.min_start_goal = float(cfg.get("min_start_goal_distance", 3.0))
        self.box_levels = tuple(float(v) for v in cfg.get("box_levels", [1.0, 0.75, 0.5, 0.25, 0.0]))
        self.box_grid = int(cfg.get("box_grid", 9))
        self.action_low = np.full(2, -self.a_max)
        self.action_high = np.full(2, self.a_max)
        self.obs_dim = 6 + 3 * self.n_obstacles

    @classmethod
    def default(cls) -> "SeekerEnv":
        return _default_env()

    # ------------------------------
    # geometría
    # ------------------------------
    def positions_safe(self, P: np.ndarray, extras: dict, margin: Optional[float] = None) -> np.ndarray:
        """P: (..., 2). True si el punto está dentro del mapa y fuera de todo obstáculo inflado."""
        mg = self.margin if margin is None else margin
        inside = np.all(np.abs(P) <= self.half_width - mg, axis=-1)
        obs, rad = extras["obstacles"], extras["radii"]
        d = np.linalg.norm(P[..., None, :] - obs, axis=-1)
        clear = np.all(d >= rad + mg, axis=-1)
        return inside & clear

    def braking_action(self, v: np.ndarray) -> np.ndarray:
        return -np.sign(v) * np.minimum(self.a_max, np.abs(v) / self.dt)

    def braking_safe(self, s: EnvState, U: np.ndarray, margin: Optional[float] = None) -> np.ndarray:
        """
        Para cada acción de U (N, 2): aplica la acción un paso y luego frena
        por eje hasta parar; True si todas las posiciones son seguras.
        """
        U = np.atleast_2d(np.asarray(U, dtype=np.float64))
        e, v = s.x[:2], s.x[2:]
        E = np.broadcast_to(e + self.dt * v, U.shape).copy()
        V = v + self.dt * U
        ok = self.positions_safe(E, s.extras, margin)
        steps_left = max(self.horizon - s.t - 1, 0)
        for _ in range(steps_left):
            if not np.any(V):
                break
            A = self.braking_action(V)
            E = E + self.dt * V
            V = V + self.dt * A
            # parada exacta para no oscilar alrededor de cero
            V[np.abs(V) < 1e-12] = 0.0
            ok &= self.positions_safe(E, s.extras, margin)
        return ok

    def safe_box(self, s: EnvState) -> Tuple[np.ndarray, np.ndarray]:
        """
        Caja [lo, hi] de aceleraciones seguras. Se parte de la caja completa
        y se recorta el lado con más puntos inseguros de la rejilla, nivel a
        nivel, hacia la acción de frenado.
        """
        anchor = self.braking_action(s.x[2:])
        levels = self.box_levels
        idx = [0, 0, 0, 0]  # +x, -x, +y, -y
        last = len(levels) - 1
        while True:
            hi = anchor + np.array([levels[idx[0]], levels[idx[2]]]) * (self.a_max - anchor)
            lo = anchor - np.array([levels[idx[1]], levels[idx[3]]]) * (anchor + self.a_max)
            gx = np.linspace(lo[0], hi[0], self.box_grid)
            gy = np.linspace(lo[1], hi[1], self.box_grid)
            grid = np.array(np.meshgrid(gx, gy, indexing="ij")).reshape(2, -1).T
            ok = self.braking_safe(s, grid)
            if np.all(ok):
                return lo, hi
            if all(i == last for i in idx):
                raise EmptySafeSet(f"seeker: ni siquiera frenar es seguro en t={s.t}")
            dev = grid[~ok] - anchor
            counts = np.array([
                np.sum(dev[:, 0] > 0), np.sum(dev[:, 0] < 0),
                np.sum(dev[:, 1] > 0), np.sum(dev[:, 1] < 0),
            ])
            counts[[i == last for i in idx]] = -1
            side = int(np.argmax(counts))
            if counts[side] <= 0:
                # los puntos inseguros coinciden con el ancla en ambos ejes
                idx = [last] * 4
            else:
                idx[side] += 1

    def safe_action_set(self, s: EnvState) -> SafeActionSet:
        lo, hi = self.safe_box(s)
        return SafeActionSet.direct(Zonotope.box(lo, hi))

    def safe_action_set_or_raise(self, s: EnvState) -> SafeActionSet:
        return self.safe_action_set(s)

    # ------------------------------
    # episodio
    # ------------------------------
    def reward(self, e_next: np.ndarray, goal: np.ndarray) -> float:
        return float(-1.0 + np.exp(-np.linalg.norm(e_next - goal)))

    def step(self, s: EnvState, u) -> StepResult:
        u = self.clip_action(u)
        e, v = s.x[:2], s.x[2:]
        e_next = e + self.dt * v
        v_next = v + self.dt * u
        x_next = np.concatenate([e_next, v_next])
        goal = s.extras["goal"]
        r = self.reward(e_next, goal)
        t = s.t + 1
        outcome = "ok"
        if not self.positions_safe(e_next, s.extras, margin=0.0):
            outcome = "collision"
        elif np.linalg.norm(e_next - goal) <= self.goal_radius:
            outcome = "goal"
        elif t >= self.horizon:
            outcome = "horizon"
        s_next = EnvState(x=x_next, t=t, rng=s.rng, extras=s.extras)
        return self._result(s_next, r, outcome != "ok", u, outcome)

    def reset(self, seed: int) -> EnvState:
        rng = np.random.default_rng(seed)
        L = self.half_width - 1.0
        for _ in range(RESET_MAX_TRIES):
            start = rng.uniform(-L, L, size=2)
            goal = rng.uniform(-L, L, size=2)
            centers = rng.uniform(-L, L, size=(self.n_obstacles, 2))
            radii = rng.uniform(*self.radius_range, size=self.n_obstacles)
            if np.linalg.norm(goal - start) < self.min_start_goal:
                continue
            if np.any(np.linalg.norm(centers - start, axis=1) < radii + self.margin + 0.1):
                continue
            if np.any(np.linalg.norm(centers - goal, axis=1) < radii + self.goal_radius):
                continue
            # al menos un obstáculo corta el segmento inicio-meta
            if not any(segment_point_distance(start, goal, c) <= r for c, r in zip(centers, radii)):
                continue
            extras = {"goal": goal, "obstacles": centers, "radii": radii}
            return EnvState(x=np.concatenate([start, np.zeros(2)]), t=0, rng=rng, extras=extras)
        raise SamplingBudgetExceeded(f"seeker: sin estado inicial válido tras {RESET_MAX_TRIES} intentos (seed={seed})")

    def observe(self, s: EnvState) -> np.ndarray:
        e, v = s.x[:2], s.x[2:]
        ex = s.extras
        parts = [e, v, ex["goal"] - e]
        for c, r in zip(ex["obstacles"], ex["radii"]):
            parts.append(np.array([c[0] - e[0], c[1] - e[1], r]))
        return np.concatenate(parts)

    def return_proxy(self, s: EnvState, u) -> float:
        """-1/2 ||u - u*||^2 con u* la aceleración que deja velocidad unitaria hacia la meta."""
        u = self.check_action(u)
        e, v = s.x[:2], s.x[2:]
        d = s.extras["goal"] - e
        v_des = self.a_max * d / max(float(np.linalg.norm(d)), 1e-12)
        u_star = (v_des - v) / self.dt
        return float(-0.5 * np.sum((u - u_star) ** 2))


@lru_cache(maxsize=None)
def _default_env() -> SeekerEnv:
    return SeekerEnv()


def seeker_step(s: EnvState, u, env: Optional[SeekerEnv] = None) -> StepResult:
    return (env or _default_env()).step(s, u)

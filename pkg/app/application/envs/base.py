# app/application/envs/base.py
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Iterable, Optional

import numpy as np

from app.domain.errors import ConfigError, DimensionError, EmptySafeSet
from app.domain.types import EnvState, SafeActionSet, StepInfo, StepResult, Zonotope, as_vector
from app.application.safety.projection import is_nonempty


class Env(ABC):
    """
    Entorno episódico con conjunto de acciones seguras dependiente del estado.
    `step` es el paso crudo (sin safeguard); los wirings viven en app/application/wiring.py.
    """

    name: str = ""
    obs_dim: int = 0
    action_dim: int = 0
    horizon: int = 0
    dt: float = 0.0
    action_low: np.ndarray
    action_high: np.ndarray

    @classmethod
    def default(cls) -> "Env":
        """Instancia con las constantes de data/envs (una por proceso)."""
        raise NotImplementedError

    @abstractmethod
    def reset(self, seed: int) -> EnvState: ...

    @abstractmethod
    def step(self, s: EnvState, u) -> StepResult: ...

    @abstractmethod
    def safe_action_set(self, s: EnvState) -> SafeActionSet: ...

    @abstractmethod
    def observe(self, s: EnvState) -> np.ndarray: ...

    @abstractmethod
    def return_proxy(self, s: EnvState, u) -> float:
        """Objetivo cuadrático de un paso usado por el ejemplo mínimo."""

    # ------------------------------
    # utilidades comunes
    # ------------------------------
    def make_state(self, x, t: int = 0, seed: int = 0, **extras) -> EnvState:
        return EnvState(x=np.asarray(x, dtype=np.float64), t=t, rng=np.random.default_rng(seed), extras=dict(extras))

    def check_action(self, u) -> np.ndarray:
        u = as_vector(u, "u")
        if u.shape[0] != self.action_dim:
            raise DimensionError(f"{self.name}: acción de dimensión {u.shape[0]}, se esperaba {self.action_dim}")
        return u

    def clip_action(self, u) -> np.ndarray:
        return np.clip(self.check_action(u), self.action_low, self.action_high)

    def safe_action_set_or_raise(self, s: EnvState) -> SafeActionSet:
        ss = self.safe_action_set(s)
        if not is_nonempty(ss, s.x):
            raise EmptySafeSet(f"{self.name}: conjunto seguro vacío en t={s.t}")
        return ss

    def _result(self, s_next: EnvState, reward: float, done: bool, u_applied, outcome: str = "ok") -> StepResult:
        if not np.isfinite(reward):
            raise ValueError("recompensa no finita")
        info = StepInfo(applied_action=np.array(u_applied, dtype=np.float64), intervention=False, penalty=0.0, outcome=outcome)
        return StepResult(next_state=s_next, reward=float(reward), done=bool(done), info=info)


def box_samples(z: Zonotope, scale: float, n_grid: int, n_random: int, rng: np.random.Generator) -> Iterable[np.ndarray]:
    """Vértices escalados (si caben), rejilla en beta y muestras aleatorias dentro del zonotopo."""
    eta = z.n_generators
    pts = []
    if eta <= 8:
        signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * eta, indexing="ij")).reshape(eta, -1).T
        pts.extend(signs * scale)
    if n_grid > 1 and eta <= 2:
        g = np.linspace(-scale, scale, n_grid)
        mesh = np.array(np.meshgrid(*[g] * eta, indexing="ij")).reshape(eta, -1).T
        pts.extend(mesh)
    pts.extend(rng.uniform(-scale, scale, size=(n_random, eta)))
    for beta in pts:
        yield z.center + z.generators @ beta


def validate_invariance(
    env: "Env",
    x_safe: Zonotope,
    make_state,
    scale: float = 1.0,
    n_grid: int = 9,
    n_random: int = 32,
    seed: int = 0,
) -> None:
    """
    Comprueba en una muestra de estados del conjunto seguro que siempre
    existe una acción admisible que mantiene el siguiente estado dentro
    (invarianza de control a un paso). Falla con ConfigError.
    """
    rng = np.random.default_rng(seed)
    for x in box_samples(x_safe, scale, n_grid, n_random, rng):
        s = make_state(x)
        if not is_nonempty(env.safe_action_set(s), x):
            raise ConfigError(
                f"{env.name}: el conjunto seguro no es invariante en x={np.array2string(x, precision=4)}"
            )


def require(cfg: dict, key: str, env: str, cast: Optional[type] = float):
    if key not in cfg:
        raise ConfigError(f"{env}: falta la constante '{key}'")
    v = cfg[key]
    return cast(v) if cast is not None else v


_VALIDATED: set = set()


def validate_once(env: "Env", x_safe: Zonotope, make_state, **kwargs) -> None:
    """validate_invariance memorizado por (entorno, constantes, conjunto)."""
    key = (env.name, repr(sorted(env.constants.items())), x_safe.center.tobytes(), x_safe.generators.tobytes())
    if key in _VALIDATED:
        return
    validate_invariance(env, x_safe, make_state, **kwargs)
    _VALIDATED.add(key)

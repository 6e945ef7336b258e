# app/application/envs/registry.py
from __future__ import annotations

from typing import Dict, Type

from app.domain.errors import ConfigError
from app.application.envs.base import Env
from app.application.envs.pendulum import PendulumEnv
from app.application.envs.quadrotor import QuadrotorEnv
from app.application.envs.seeker import SeekerEnv

ENVS: Dict[str, Type[Env]] = {
    "pendulum": PendulumEnv,
    "quadrotor": QuadrotorEnv,
    "seeker": SeekerEnv,
}


def make_env(name: str) -> Env:
    """Instancia compartida por proceso (las constantes se validan una vez)."""
    try:
        cls = ENVS[name]
    except KeyError:
        raise ConfigError(f"Entorno desconocido: {name!r}. Opciones: {sorted(ENVS)}") from None
    return cls.default()

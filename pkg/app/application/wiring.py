# app/application/wiring.py
"""
Cableado del safeguard respecto al agente.

  - unsafe: la acción de la política se ejecuta tal cual (recortada a los actuadores).
  - se (entorno seguro): la proyección vive dentro del entorno; el agente
    solo ve u y la recompensa (opcionalmente penalizada).
  - sp (política segura): la proyección es la última capa de la política;
    el agente conoce u_phi y, en modo determinista, el Jacobiano.

En ejecución SE y SP hacen exactamente lo mismo (proyectar y avanzar); la
diferencia está en qué se guarda y cómo fluye el gradiente.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Literal, Optional

import numpy as np

from app.core.constants import EPS_FEAS
from app.domain.errors import EmptySafeSet, InfeasibleProjection
from app.domain.types import (
    EnvState,
    Mitigation,
    ProjectionSolution,
    SafeActionSet,
    SafeguardJacobian,
    StepInfo,
    StepResult,
    WiringMode,
    as_vector,
)
from app.application.envs.base import Env
from app.application.rl.penalty import penalty
from app.application.safety.projection import project_or_raise
from app.application.safety.sensitivity import project_and_jacobian

PolicyMode = Literal["deterministic", "stochastic"]


@dataclass(frozen=True)
class WiredStep:
    result: StepResult
    u: np.ndarray                       # salida de la política
    u_phi: np.ndarray                   # acción ejecutada
    safe_set: Optional[SafeActionSet]   # None en unsafe o si el paso fue infactible


@dataclass(frozen=True)
class SpAction:
    u: np.ndarray
    u_phi: np.ndarray
    solution: ProjectionSolution
    jacobian: Optional[SafeguardJacobian]


def infeasible_result(s: EnvState, u) -> StepResult:
    """Fin de episodio por conjunto seguro vacío: el estado no avanza."""
    info = StepInfo(applied_action=as_vector(u, "u").copy(), intervention=False, penalty=0.0, outcome="infeasible")
    return StepResult(next_state=s, reward=0.0, done=True, info=info)


def unsafe_step(env: Env, s: EnvState, u) -> WiredStep:
    u = as_vector(u, "u")
    res = env.step(s, u)
    return WiredStep(res, u, res.info.applied_action, None)


def safeguarded_step(
    env: Env,
    s: EnvState,
    u,
    w: float = 0.0,
    subtract_penalty: bool = False,
    safe_set: Optional[SafeActionSet] = None,
) -> WiredStep:
    """
    Proyecta u sobre U^phi_x y avanza con u_phi. `info.penalty` lleva
    siempre h = w ||u - u_phi||^2; solo se resta de la recompensa si
    `subtract_penalty`. EmptySafeSet / InfeasibleProjection se propagan.
    `safe_set` permite reutilizar un conjunto ya calculado para `s`.
    """
    u = as_vector(u, "u")
    if safe_set is None:
        safe_set = env.safe_action_set_or_raise(s)
    sol = project_or_raise(safe_set, s.x, u)
    raw = env.step(s, sol.u_phi)
    h = penalty(u, sol.u_phi, w)
    moved = float(np.linalg.norm(u - sol.u_phi)) > EPS_FEAS
    reward = raw.reward - h if subtract_penalty else raw.reward
    info = replace(raw.info, intervention=moved, penalty=h)
    res = StepResult(next_state=raw.next_state, reward=float(reward), done=raw.done, info=info)
    return WiredStep(res, u, sol.u_phi, safe_set)


def se_env_step(env: Env, s: EnvState, u, mitigation: Mitigation = Mitigation.NONE, w: float = 0.0) -> StepResult:
    return safeguarded_step(env, s, u, w, subtract_penalty=mitigation == Mitigation.PENALTY).result


def wired_step(
    env: Env,
    s: EnvState,
    u,
    wiring: WiringMode,
    mitigation: Mitigation = Mitigation.NONE,
    w: float = 0.0,
    safe_set: Optional[SafeActionSet] = None,
) -> WiredStep:
    """Paso según el wiring; un conjunto seguro vacío termina el episodio."""
    if wiring == WiringMode.UNSAFE:
        return unsafe_step(env, s, u)
    subtract = wiring == WiringMode.SAFE_ENV and mitigation == Mitigation.PENALTY
    try:
        return safeguarded_step(env, s, u, w, subtract, safe_set)
    except (EmptySafeSet, InfeasibleProjection):
        u = as_vector(u, "u")
        return WiredStep(infeasible_result(s, u), u, u.copy(), None)


# ------------------------------
# Política segura
# ------------------------------
def sp_policy_act(
    pol: Callable[[np.ndarray], np.ndarray],
    safe_set: SafeActionSet,
    x,
    obs,
    mode: PolicyMode = "deterministic",
) -> SpAction:
    """
    u = pol(obs) y u_phi = Phi(x, u). En modo determinista devuelve además
    el Jacobiano para el paso hacia atrás; en estocástico el gradiente usa
    log pi(u|x) de la acción previa a la proyección y no hace falta.
    """
    u = as_vector(pol(np.asarray(obs, dtype=np.float64)), "u")
    if mode == "deterministic":
        sol, jac = project_and_jacobian(safe_set, x, u)
        return SpAction(u, sol.u_phi, sol, jac)
    sol = project_or_raise(safe_set, x, u)
    return SpAction(u, sol.u_phi, sol, None)


def sp_target_action(
    pol_target: Callable[[np.ndarray], np.ndarray],
    safe_set: SafeActionSet,
    x_next,
    obs_next,
    noise: Optional[np.ndarray] = None,
    low: Optional[np.ndarray] = None,
    high: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Acción objetivo (con ruido de suavizado) proyectada antes de evaluar el crítico objetivo."""
    u = as_vector(pol_target(np.asarray(obs_next, dtype=np.float64)), "u")
    if noise is not None:
        u = u + noise
    if low is not None and high is not None:
        u = np.clip(u, low, high)
    return project_or_raise(safe_set, x_next, u).u_phi

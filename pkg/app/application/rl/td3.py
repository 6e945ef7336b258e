# app/application/rl/td3.py
"""
TD3 (crítico doble, actor retardado, suavizado de la acción objetivo) para
los tres wirings.

  - unsafe / se: el crítico ve la acción de la política u.
  - sp: el crítico ve u_phi; el gradiente del actor atraviesa la proyección
    (J' dq/du_phi). Mitigaciones: psl (pérdida por muestra) y penc (crítico
    de penalización entrenado sobre u).

El actor es un MLP cuya salida lineal se comprime con tanh al rango de los
actuadores. Los ruidos de exploración y de suavizado se escalan por el
semirrango de la acción.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from app.domain.errors import ConfigError, NumericalError
from app.domain.models import Td3Params
from app.domain.types import Mitigation, Transition, WiringMode
from app.application.rl.networks import (
    GradAccumulator,
    MlpArch,
    MlpParams,
    Optimizer,
    init_mlp,
    mlp_backward,
    mlp_forward,
    polyak,
)
from app.application.rl.penalty import psl_action_grad
from app.application.rl.replay import Batch, ReplayBuffer
from app.application.safety.sensitivity import project_and_jacobian
from app.application.wiring import sp_target_action


# ------------------------------
# Actor y crítico
# ------------------------------
def _mid_half(low: np.ndarray, high: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return (low + high) / 2.0, (high - low) / 2.0


def actor_forward(actor: MlpParams, obs, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    mid, half = _mid_half(low, high)
    return mid + half * np.tanh(mlp_forward(actor, obs))


def actor_backward(actor: MlpParams, obs, upstream, low: np.ndarray, high: np.ndarray) -> GradAccumulator:
    """Gradiente de sum(upstream * actor(obs)) respecto a los parámetros del actor."""
    _, half = _mid_half(low, high)
    th = np.tanh(mlp_forward(actor, obs))
    up = np.asarray(upstream, dtype=np.float64).reshape(th.shape)
    g, _ = mlp_backward(actor, obs, up * half * (1.0 - th * th))
    return g


def critic_forward(q: MlpParams, obs, u) -> np.ndarray:
    X = np.hstack([np.atleast_2d(obs), np.atleast_2d(u)])
    return mlp_forward(q, X)[:, 0]


def critic_action_grad(q: MlpParams, obs, u) -> np.ndarray:
    """dq/du por muestra, forma (B, m)."""
    O = np.atleast_2d(obs)
    X = np.hstack([O, np.atleast_2d(u)])
    _, g_in = mlp_backward(q, X, np.ones((X.shape[0], 1)))
    return g_in[:, O.shape[1]:]


def _critic_step(q: MlpParams, opt: Optimizer, obs, u, y: np.ndarray) -> Tuple[MlpParams, float]:
    X = np.hstack([obs, u])
    pred = mlp_forward(q, X)[:, 0]
    diff = pred - y
    loss = float(np.mean(diff * diff))
    if not np.isfinite(loss):
        raise NumericalError("pérdida del crítico no finita")
    g, _ = mlp_backward(q, X, (2.0 * diff / diff.shape[0]).reshape(-1, 1))
    return opt.step(q, g), loss


# ------------------------------
# Estado
# ------------------------------
@dataclass
class Td3State:
    params: Td3Params
    wiring: WiringMode
    mitigation: Mitigation
    w: float
    low: np.ndarray
    high: np.ndarray
    actor: MlpParams
    actor_targ: MlpParams
    q1: MlpParams
    q2: MlpParams
    q1_targ: MlpParams
    q2_targ: MlpParams
    actor_opt: Optimizer
    q1_opt: Optimizer
    q2_opt: Optimizer
    replay: ReplayBuffer
    rng: np.random.Generator
    q_pen: Optional[MlpParams] = None
    q_pen_targ: Optional[MlpParams] = None
    pen_opt: Optional[Optimizer] = None
    n_updates: int = 0
    last_actor_loss: float = float("nan")
    last_critic_loss: float = float("nan")
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def action_dim(self) -> int:
        return int(self.low.shape[0])

    @property
    def half_range(self) -> np.ndarray:
        return (self.high - self.low) / 2.0

    @property
    def uses_penalty_critic(self) -> bool:
        return self.wiring == WiringMode.SAFE_POLICY and self.mitigation == Mitigation.PENC


def init_td3(
    obs_dim: int,
    low,
    high,
    params: Td3Params,
    wiring: WiringMode,
    mitigation: Mitigation,
    w: float,
    init_rng: np.random.Generator,
    update_rng: np.random.Generator,
) -> Td3State:
    low = np.asarray(low, dtype=np.float64)
    high = np.asarray(high, dtype=np.float64)
    m = low.shape[0]
    hidden = list(params.hidden)
    actor = init_mlp([obs_dim, *hidden, m], init_rng, out_scale=0.1)
    q1 = init_mlp([obs_dim + m, *hidden, 1], init_rng)
    q2 = init_mlp([obs_dim + m, *hidden, 1], init_rng)
    st = Td3State(
        params=params,
        wiring=wiring,
        mitigation=mitigation,
        w=w,
        low=low,
        high=high,
        actor=actor,
        actor_targ=actor.copy(),
        q1=q1,
        q2=q2,
        q1_targ=q1.copy(),
        q2_targ=q2.copy(),
        actor_opt=Optimizer(params.actor_lr),
        q1_opt=Optimizer(params.critic_lr),
        q2_opt=Optimizer(params.critic_lr),
        replay=ReplayBuffer(params.replay_capacity, obs_dim, m),
        rng=update_rng,
    )
    if st.uses_penalty_critic:
        st.q_pen = init_mlp([obs_dim + m, *hidden, 1], init_rng)
        st.q_pen_targ = st.q_pen.copy()
        st.pen_opt = Optimizer(params.critic_lr)
    return st


def select_action(st: Td3State, obs, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Acción del actor; con `rng` se añade ruido de exploración (antes de proyectar)."""
    u = actor_forward(st.actor, np.asarray(obs, dtype=np.float64), st.low, st.high)
    if rng is not None:
        u = u + rng.normal(0.0, st.params.exploration_noise, size=u.shape) * st.half_range
    return np.clip(u, st.low, st.high)


def store(st: Td3State, tr: Transition) -> None:
    st.replay.add(tr)


# ------------------------------
# Objetivos del crítico
# ------------------------------
def target_noise(st: Td3State, batch_size: int) -> np.ndarray:
    p = st.params
    eps = st.rng.normal(0.0, p.target_noise, size=(batch_size, st.action_dim))
    return np.clip(eps, -p.target_noise_clip, p.target_noise_clip) * st.half_range


def _raw_target_actions(st: Td3State, batch: Batch, noise: np.ndarray) -> np.ndarray:
    a = actor_forward(st.actor_targ, batch.obs_next, st.low, st.high) + noise
    return np.clip(a, st.low, st.high)


def td3_targets(st: Td3State, batch: Batch, noise: np.ndarray) -> np.ndarray:
    """y = r + gamma (1 - done) min(q1', q2')(x', a'), con a' proyectada en SP."""
    a_next = _raw_target_actions(st, batch, noise)
    if st.wiring == WiringMode.SAFE_POLICY:
        pol_target = lambda o: actor_forward(st.actor_targ, o, st.low, st.high)  # noqa: E731
        for i, ss in enumerate(batch.safe_set_next):
            if ss is not None and not batch.done[i]:
                a_next[i] = sp_target_action(pol_target, ss, None, batch.obs_next[i], noise[i], st.low, st.high)
    q_next = np.minimum(
        critic_forward(st.q1_targ, batch.obs_next, a_next),
        critic_forward(st.q2_targ, batch.obs_next, a_next),
    )
    return batch.r + st.params.gamma * (1.0 - batch.done) * q_next


def penalty_targets(st: Td3State, batch: Batch, noise: np.ndarray) -> np.ndarray:
    """y_pen = h + gamma (1 - done) q_pen'(x', a'), con a' sin proyectar."""
    a_next = _raw_target_actions(st, batch, noise)
    q_next = critic_forward(st.q_pen_targ, batch.obs_next, a_next)
    return batch.penalty + st.params.gamma * (1.0 - batch.done) * q_next


def critic_update(st: Td3State, batch: Batch) -> float:
    noise = target_noise(st, len(batch))
    y = td3_targets(st, batch, noise)
    u_in = batch.u_phi if st.wiring == WiringMode.SAFE_POLICY else batch.u
    st.q1, l1 = _critic_step(st.q1, st.q1_opt, batch.obs, u_in, y)
    st.q2, l2 = _critic_step(st.q2, st.q2_opt, batch.obs, u_in, y)
    if st.uses_penalty_critic:
        y_pen = penalty_targets(st, batch, noise)
        st.q_pen, lp = _critic_step(st.q_pen, st.pen_opt, batch.obs, batch.u, y_pen)
        st.extra["penalty_critic_loss"] = lp
    st.last_critic_loss = 0.5 * (l1 + l2)
    return st.last_critic_loss


# ------------------------------
# Actor
# ------------------------------
def actor_action_grad(st: Td3State, batch: Batch) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Gradiente de la pérdida del actor respecto a su salida u, por muestra
    (ya dividido por B). Devuelve (U, upstream, pérdida).
    """
    obs = batch.obs
    U = actor_forward(st.actor, obs, st.low, st.high)
    B, m = U.shape
    if st.wiring != WiringMode.SAFE_POLICY:
        up = -critic_action_grad(st.q1, obs, U)
        loss = -float(np.mean(critic_forward(st.q1, obs, U)))
        return U, up / B, loss

    U_phi = np.empty_like(U)
    Js = np.empty((B, m, m))
    for i in range(B):
        ss = batch.safe_set[i]
        if ss is None:
            U_phi[i], Js[i] = U[i], np.eye(m)
            continue
        sol, jac = project_and_jacobian(ss, None, U[i])
        U_phi[i], Js[i] = sol.u_phi, jac.J
    gq = critic_action_grad(st.q1, obs, U_phi)
    up = -np.einsum("bij,bi->bj", Js, gq)
    loss = -float(np.mean(critic_forward(st.q1, obs, U_phi)))
    if st.mitigation == Mitigation.PSL:
        for i in range(B):
            up[i] += psl_action_grad(U[i], U_phi[i], Js[i], st.w)
        d = U - U_phi
        loss += float(st.w * np.mean(np.sum(d * d, axis=1)))
    elif st.mitigation == Mitigation.PENC:
        up += critic_action_grad(st.q_pen, obs, U)
        loss += float(np.mean(critic_forward(st.q_pen, obs, U)))
    return U, up / B, loss


def actor_update(st: Td3State, batch: Batch) -> float:
    _, up, loss = actor_action_grad(st, batch)
    if not np.isfinite(loss):
        raise NumericalError("pérdida del actor no finita")
    g = actor_backward(st.actor, batch.obs, up, st.low, st.high)
    st.actor = st.actor_opt.step(st.actor, g)
    tau = st.params.tau
    st.actor_targ = polyak(st.actor_targ, st.actor, tau)
    st.q1_targ = polyak(st.q1_targ, st.q1, tau)
    st.q2_targ = polyak(st.q2_targ, st.q2, tau)
    if st.uses_penalty_critic:
        st.q_pen_targ = polyak(st.q_pen_targ, st.q_pen, tau)
    st.last_actor_loss = loss
    return loss


def _update(st: Td3State, batch: Batch) -> Td3State:
    critic_update(st, batch)
    st.n_updates += 1
    if st.n_updates % st.params.policy_delay == 0:
        actor_update(st, batch)
    return st


def td3_update_se(st: Td3State, batch: Batch) -> Td3State:
    if st.wiring == WiringMode.SAFE_POLICY:
        raise ConfigError("td3_update_se requiere wiring unsafe o se")
    return _update(st, batch)


def td3_update_sp(st: Td3State, batch: Batch, mitigation: Optional[Mitigation] = None) -> Td3State:
    if st.wiring != WiringMode.SAFE_POLICY:
        raise ConfigError("td3_update_sp requiere wiring sp")
    if mitigation is not None and mitigation != st.mitigation:
        raise ConfigError("la mitigación está fijada al crear el estado")
    return _update(st, batch)


def td3_update(st: Td3State, batch: Batch) -> Td3State:
    if st.wiring == WiringMode.SAFE_POLICY:
        return td3_update_sp(st, batch)
    return td3_update_se(st, batch)


# ------------------------------
# Checkpoint
# ------------------------------
def td3_blocks(st: Td3State) -> Dict[str, Tuple[Tuple[int, ...], np.ndarray]]:
    nets = {"actor": st.actor, "q1": st.q1, "q2": st.q2}
    if st.q_pen is not None:
        nets["q_pen"] = st.q_pen
    return {k: (p.arch.sizes, p.flat) for k, p in nets.items()}


def td3_load_blocks(st: Td3State, blocks: Dict[str, Tuple[Tuple[int, ...], np.ndarray]]) -> Td3State:
    for name in ("actor", "q1", "q2", "q_pen"):
        if name not in blocks:
            continue
        sizes, flat = blocks[name]
        p = MlpParams(MlpArch(tuple(sizes)), flat)
        setattr(st, name, p)
        setattr(st, f"{name}_targ", p.copy())
    return st

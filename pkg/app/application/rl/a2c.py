# app/application/rl/a2c.py
"""
A2C con GAE y política gaussiana diagonal.

El gradiente de la política usa siempre log pi(u|x) de la acción previa a
la proyección, tanto en SE como en SP; por eso, sin mitigaciones, ambos
wirings producen la misma secuencia de parámetros.

Mitigaciones:
  - se + penalty: la recompensa ya llega penalizada desde el entorno.
  - sp + psl: pérdida w ||mu - Phi(mu)||^2 sobre la media.
  - sp + penc: cabeza de valor de penalización; su GAE se resta de la ventaja.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.domain.errors import NumericalError
from app.domain.models import A2cParams
from app.domain.types import Mitigation, SafeActionSet, WiringMode
from app.application.rl.advantages import gae
from app.application.rl.networks import (
    GaussianPolicy,
    GradAccumulator,
    MlpArch,
    MlpParams,
    Optimizer,
    gaussian_logprob_grad,
    init_mlp,
    mlp_backward,
    mlp_forward,
)
from app.application.rl.penalty import psl_action_grad
from app.application.safety.sensitivity import project_and_jacobian


@dataclass
class Rollout:
    """n pasos consecutivos; `last_obs` es la observación tras el último paso."""

    obs: List[np.ndarray] = field(default_factory=list)
    u: List[np.ndarray] = field(default_factory=list)
    r: List[float] = field(default_factory=list)
    penalty: List[float] = field(default_factory=list)
    done: List[bool] = field(default_factory=list)
    safe_set: List[Optional[SafeActionSet]] = field(default_factory=list)
    last_obs: Optional[np.ndarray] = None

    def add(self, obs, u, r: float, h: float, done: bool, safe_set: Optional[SafeActionSet]) -> None:
        self.obs.append(np.asarray(obs, dtype=np.float64))
        self.u.append(np.asarray(u, dtype=np.float64))
        self.r.append(float(r))
        self.penalty.append(float(h))
        self.done.append(bool(done))
        self.safe_set.append(safe_set)

    def __len__(self) -> int:
        return len(self.r)


@dataclass
class A2cState:
    params: A2cParams
    wiring: WiringMode
    mitigation: Mitigation
    w: float
    policy: GaussianPolicy
    value: MlpParams
    policy_opt: Optimizer
    value_opt: Optimizer
    pen_value: Optional[MlpParams] = None
    pen_opt: Optional[Optimizer] = None
    rollout: Rollout = field(default_factory=Rollout)
    n_updates: int = 0
    last_actor_loss: float = float("nan")
    last_critic_loss: float = float("nan")

    @property
    def uses_penalty_value(self) -> bool:
        return self.wiring == WiringMode.SAFE_POLICY and self.mitigation == Mitigation.PENC


def init_a2c(
    obs_dim: int,
    action_dim: int,
    params: A2cParams,
    wiring: WiringMode,
    mitigation: Mitigation,
    w: float,
    init_rng: np.random.Generator,
) -> A2cState:
    hidden = list(params.hidden)
    mean = init_mlp([obs_dim, *hidden, action_dim], init_rng, out_scale=0.1)
    value = init_mlp([obs_dim, *hidden, 1], init_rng)
    st = A2cState(
        params=params,
        wiring=wiring,
        mitigation=mitigation,
        w=w,
        policy=GaussianPolicy(mean, np.full(action_dim, params.init_log_std)),
        value=value,
        policy_opt=Optimizer(params.actor_lr),
        value_opt=Optimizer(params.critic_lr),
    )
    if st.uses_penalty_value:
        st.pen_value = init_mlp([obs_dim, *hidden, 1], init_rng)
        st.pen_opt = Optimizer(params.critic_lr)
    return st


def sample_action(st: A2cState, obs, rng: np.random.Generator) -> np.ndarray:
    return st.policy.sample(np.asarray(obs, dtype=np.float64), rng)


def mean_action(st: A2cState, obs) -> np.ndarray:
    return mlp_forward(st.policy.mean, np.asarray(obs, dtype=np.float64))


def _values(v: MlpParams, obs: np.ndarray) -> np.ndarray:
    return mlp_forward(v, obs)[:, 0]


def _value_step(v: MlpParams, opt: Optimizer, obs: np.ndarray, target: np.ndarray, coef: float) -> Tuple[MlpParams, float]:
    pred = _values(v, obs)
    diff = pred - target
    loss = float(coef * np.mean(diff * diff))
    if not np.isfinite(loss):
        raise NumericalError("pérdida de la función de valor no finita")
    g, _ = mlp_backward(v, obs, (coef * 2.0 * diff / diff.shape[0]).reshape(-1, 1))
    return opt.step(v, g), loss


def advantages(st: A2cState, ro: Rollout) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """(ventaja final, retornos para v, retornos para la cabeza de penalización)."""
    obs = np.vstack(ro.obs)
    all_obs = np.vstack([obs, ro.last_obs.reshape(1, -1)])
    p = st.params
    v = _values(st.value, all_obs)
    adv = gae(ro.r, v, ro.done, p.gamma, p.lam)
    returns = adv + v[:-1]
    pen_returns = None
    if st.uses_penalty_value:
        vp = _values(st.pen_value, all_obs)
        adv_pen = gae(ro.penalty, vp, ro.done, p.gamma, p.lam)
        pen_returns = adv_pen + vp[:-1]
        adv = adv - adv_pen
    return adv, returns, pen_returns


def policy_loss_grad(st: A2cState, ro: Rollout, adv: np.ndarray) -> Tuple[GradAccumulator, float]:
    """Gradiente (de descenso) de -1/T sum a_t log pi(u_t|x_t) más los términos de mitigación."""
    obs = np.vstack(ro.obs)
    U = np.vstack(ro.u)
    T = obs.shape[0]
    logp, g = gaussian_logprob_grad(st.policy, obs, U, weights=adv)
    grad = GradAccumulator(-g.flat / T)
    loss = -float(np.mean(adv * logp))
    n_mean = st.policy.mean.arch.n_params
    if st.params.entropy_coef:
        # H = sum(log_std) + cte
        grad.flat[n_mean:] -= st.params.entropy_coef
        loss -= st.params.entropy_coef * float(np.sum(st.policy.log_std))
    if st.wiring == WiringMode.SAFE_POLICY and st.mitigation == Mitigation.PSL:
        mu = mlp_forward(st.policy.mean, obs)
        up = np.zeros_like(mu)
        xi = 0.0
        for t in range(T):
            ss = ro.safe_set[t]
            if ss is None:
                continue
            sol, jac = project_and_jacobian(ss, None, mu[t])
            up[t] = psl_action_grad(mu[t], sol.u_phi, jac.J, st.w)
            d = mu[t] - sol.u_phi
            xi += st.w * float(d @ d)
        g_mean, _ = mlp_backward(st.policy.mean, obs, up / T)
        grad.flat[:n_mean] += g_mean.flat
        loss += xi / T
    if not np.isfinite(loss):
        raise NumericalError("pérdida de la política no finita")
    return grad, loss


def a2c_update(st: A2cState, ro: Optional[Rollout] = None) -> A2cState:
    ro = st.rollout if ro is None else ro
    if len(ro) == 0 or ro.last_obs is None:
        raise ValueError("rollout vacío o sin observación final")
    adv, returns, pen_returns = advantages(st, ro)
    grad, loss = policy_loss_grad(st, ro, adv)
    obs = np.vstack(ro.obs)
    st.policy = st.policy_opt.step(st.policy, grad)
    st.value, lv = _value_step(st.value, st.value_opt, obs, returns, st.params.value_coef)
    if st.uses_penalty_value:
        st.pen_value, _ = _value_step(st.pen_value, st.pen_opt, obs, pen_returns, st.params.value_coef)
    st.last_actor_loss = loss
    st.last_critic_loss = lv
    st.n_updates += 1
    st.rollout = Rollout()
    return st


def a2c_blocks(st: A2cState) -> Dict[str, Tuple[Tuple[int, ...], np.ndarray]]:
    blocks = {
        "mean": (st.policy.mean.arch.sizes, st.policy.mean.flat),
        "log_std": ((st.policy.log_std.shape[0],), st.policy.log_std),
        "value": (st.value.arch.sizes, st.value.flat),
    }
    if st.pen_value is not None:
        blocks["pen_value"] = (st.pen_value.arch.sizes, st.pen_value.flat)
    return blocks


def a2c_load_blocks(st: A2cState, blocks: Dict[str, Tuple[Tuple[int, ...], np.ndarray]]) -> A2cState:
    sizes, flat = blocks["mean"]
    mean = MlpParams(MlpArch(tuple(sizes)), flat)
    st.policy = GaussianPolicy(mean, np.array(blocks["log_std"][1], copy=True))
    sizes, flat = blocks["value"]
    st.value = MlpParams(MlpArch(tuple(sizes)), flat)
    if "pen_value" in blocks:
        sizes, flat = blocks["pen_value"]
        st.pen_value = MlpParams(MlpArch(tuple(sizes)), flat)
    return st

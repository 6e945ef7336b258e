# app/application/training.py
"""
Bucles de entrenamiento por semilla y evaluación determinista.

Streams de RNG por semilla de entrenamiento (SeedSequence.spawn, en este
orden): inicialización, muestreo de la política y actualizaciones. El ruido
del entorno vive en cada EnvState (semilla de episodio derivada).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.domain.errors import ConfigError, EmptySafeSet
from app.domain.models import ExperimentConfig
from app.domain.types import Mitigation, Transition, WiringMode
from app.application.envs.base import Env
from app.application.envs.registry import make_env
from app.application.rl import a2c, td3
from app.application.rl.networks import MlpArch, MlpParams, mlp_forward
from app.application.safety.projection import is_member
from app.application.wiring import wired_step

Blocks = Dict[str, Tuple[Tuple[int, ...], np.ndarray]]


@dataclass
class EvalResult:
    returns: List[float] = field(default_factory=list)
    interventions: List[int] = field(default_factory=list)
    penalty_sum: float = 0.0
    violations: int = 0
    infeasible: int = 0

    @property
    def mean_return(self) -> float:
        return float(np.mean(self.returns)) if self.returns else float("nan")


@dataclass
class SeedOutcome:
    train_seed: int
    rows: List[dict]
    final: EvalResult
    blocks: Blocks
    events: List[dict]


def episode_seed(train_seed: int, k: int) -> int:
    return 1_000_003 * (train_seed + 1) + k


def seed_streams(train_seed: int) -> Tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    init_ss, policy_ss, update_ss = np.random.SeedSequence(train_seed).spawn(3)
    return np.random.default_rng(init_ss), np.random.default_rng(policy_ss), np.random.default_rng(update_ss)


# ------------------------------
# Evaluación
# ------------------------------
def _violates(env: Env, s, u_applied, safe_set) -> bool:
    try:
        ss = safe_set if safe_set is not None else env.safe_action_set(s)
    except EmptySafeSet:
        return True
    return not is_member(ss, u_applied, s.x)


def evaluate(
    env: Env,
    act: Callable[[np.ndarray], np.ndarray],
    wiring: WiringMode,
    w: float,
    eval_seeds: Sequence[int],
) -> EvalResult:
    """Retorno sin penalizar, intervenciones y violaciones por episodio."""
    out = EvalResult()
    for seed in eval_seeds:
        s = env.reset(seed)
        ret, n_int = 0.0, 0
        while True:
            ws = wired_step(env, s, act(env.observe(s)), wiring, Mitigation.NONE, w)
            res = ws.result
            if res.info.outcome == "infeasible":
                out.infeasible += 1
                break
            if _violates(env, s, res.info.applied_action, ws.safe_set):
                out.violations += 1
            ret += res.reward
            n_int += int(res.info.intervention)
            out.penalty_sum += res.info.penalty
            s = res.next_state
            if res.done:
                break
        out.returns.append(ret)
        out.interventions.append(n_int)
    return out


def _row(train_seed: int, step: int, ev: EvalResult, actor_loss: float, critic_loss: float) -> dict:
    return {
        "train_seed": train_seed,
        "env_step": step,
        "eval_return_mean": ev.mean_return,
        "interventions": float(np.mean(ev.interventions)) if ev.interventions else 0.0,
        "penalty_sum": ev.penalty_sum,
        "violations": ev.violations,
        "actor_loss": actor_loss,
        "critic_loss": critic_loss,
    }


# ------------------------------
# TD3
# ------------------------------
def train_td3(cfg: ExperimentConfig, env: Env, train_seed: int) -> SeedOutcome:
    init_rng, policy_rng, update_rng = seed_streams(train_seed)
    mit = cfg.effective_mitigation
    st = td3.init_td3(
        env.obs_dim, env.action_low, env.action_high, cfg.td3, cfg.wiring, mit, cfg.w, init_rng, update_rng
    )
    p = cfg.td3
    rows: List[dict] = []
    events: List[dict] = [{"type": "seed_started", "train_seed": train_seed}]
    act = lambda o: td3.select_action(st, o)  # noqa: E731

    ep = 0
    s = env.reset(episode_seed(train_seed, ep))
    safe_set = None
    ev: Optional[EvalResult] = None
    for step in range(1, cfg.total_steps + 1):
        obs = env.observe(s)
        if step <= p.warmup_steps:
            u = policy_rng.uniform(env.action_low, env.action_high)
        else:
            u = td3.select_action(st, obs, policy_rng)
        ws = wired_step(env, s, u, cfg.wiring, mit, cfg.w, safe_set)
        res = ws.result
        safe_set = None
        if res.info.outcome == "infeasible":
            events.append({"type": "episode_infeasible", "train_seed": train_seed, "env_step": step})
        else:
            safe_set_next = None
            if cfg.wiring != WiringMode.UNSAFE and not res.done:
                try:
                    safe_set_next = env.safe_action_set_or_raise(res.next_state)
                except EmptySafeSet:
                    safe_set_next = None
                safe_set = safe_set_next
            td3.store(st, Transition(
                x=obs,
                u=ws.u,
                u_phi=ws.u_phi,
                r=res.reward,
                x_next=env.observe(res.next_state),
                done=res.done,
                penalty=res.info.penalty,
                safe_set=ws.safe_set,
                safe_set_next=safe_set_next,
            ))
        if step > p.warmup_steps and len(st.replay) >= p.batch_size:
            td3.td3_update(st, st.replay.sample(p.batch_size, update_rng))

        if res.done:
            ep += 1
            s = env.reset(episode_seed(train_seed, ep))
            safe_set = None
        else:
            s = res.next_state

        if step % cfg.eval_interval == 0:
            ev = evaluate(env, act, cfg.wiring, cfg.w, cfg.eval_seeds)
            rows.append(_row(train_seed, step, ev, st.last_actor_loss, st.last_critic_loss))
            events.append({"type": "eval_done", "train_seed": train_seed, "env_step": step, "return": ev.mean_return})

    if ev is None or cfg.total_steps % cfg.eval_interval:
        ev = evaluate(env, act, cfg.wiring, cfg.w, cfg.eval_seeds)
    return SeedOutcome(train_seed, rows, ev, td3.td3_blocks(st), events)


# ------------------------------
# A2C
# ------------------------------
def train_a2c(cfg: ExperimentConfig, env: Env, train_seed: int, on_update: Optional[Callable] = None) -> SeedOutcome:
    """`on_update(state)` se llama tras cada actualización (tests de igualdad SE/SP)."""
    init_rng, policy_rng, _ = seed_streams(train_seed)
    mit = cfg.effective_mitigation
    st = a2c.init_a2c(env.obs_dim, env.action_dim, cfg.a2c, cfg.wiring, mit, cfg.w, init_rng)
    rows: List[dict] = []
    events: List[dict] = [{"type": "seed_started", "train_seed": train_seed}]
    act = lambda o: a2c.mean_action(st, o)  # noqa: E731

    ep = 0
    s = env.reset(episode_seed(train_seed, ep))
    ev: Optional[EvalResult] = None
    for step in range(1, cfg.total_steps + 1):
        obs = env.observe(s)
        u = a2c.sample_action(st, obs, policy_rng)
        ws = wired_step(env, s, u, cfg.wiring, mit, cfg.w)
        res = ws.result
        st.rollout.add(obs, ws.u, res.reward, res.info.penalty, res.done, ws.safe_set)
        if res.info.outcome == "infeasible":
            events.append({"type": "episode_infeasible", "train_seed": train_seed, "env_step": step})
        if res.done:
            ep += 1
            s = env.reset(episode_seed(train_seed, ep))
        else:
            s = res.next_state

        if len(st.rollout) == cfg.a2c.n_steps:
            st.rollout.last_obs = env.observe(s)
            a2c.a2c_update(st)
            if on_update is not None:
                on_update(st)

        if step % cfg.eval_interval == 0:
            ev = evaluate(env, act, cfg.wiring, cfg.w, cfg.eval_seeds)
            rows.append(_row(train_seed, step, ev, st.last_actor_loss, st.last_critic_loss))
            events.append({"type": "eval_done", "train_seed": train_seed, "env_step": step, "return": ev.mean_return})

    if ev is None or cfg.total_steps % cfg.eval_interval:
        ev = evaluate(env, act, cfg.wiring, cfg.w, cfg.eval_seeds)
    return SeedOutcome(train_seed, rows, ev, a2c.a2c_blocks(st), events)


def run_seed(cfg: ExperimentConfig, seed: int) -> SeedOutcome:
    env = make_env(cfg.env)
    if cfg.algorithm == "td3":
        return train_td3(cfg, env, seed)
    return train_a2c(cfg, env, seed)


def policy_from_blocks(algorithm: str, env: Env, blocks: Blocks) -> Callable[[np.ndarray], np.ndarray]:
    """Política determinista (actor TD3 o media A2C) a partir de un checkpoint."""
    name = "actor" if algorithm == "td3" else "mean"
    if name not in blocks:
        raise ConfigError(f"checkpoint sin bloque '{name}'")
    sizes, flat = blocks[name]
    net = MlpParams(MlpArch(tuple(sizes)), flat)
    if algorithm == "td3":
        return lambda o: td3.actor_forward(net, o, env.action_low, env.action_high)
    return lambda o: mlp_forward(net, o)

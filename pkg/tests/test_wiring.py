# tests/test_wiring.py
from __future__ import annotations

import numpy as np
import pytest

from app.domain.types import Mitigation, Transition, WiringMode
from app.domain.models import Td3Params
from app.application.envs.pendulum import PendulumEnv
from app.application.envs.quadrotor import QuadrotorEnv
from app.application.rl import td3
from app.application.rl.replay import ReplayBuffer
from app.application.safety.projection import is_member, project_or_raise
from app.application.wiring import safeguarded_step, se_env_step, sp_policy_act, wired_step

U_PHI_PENDULUM = -4.8942554


def test_interventions_equivalent_to_projected_actions(rng):
    # u_e fuera del conjunto y u_b = Phi(u_e): mismo paso, mismo objetivo del crítico
    env = QuadrotorEnv.default()
    params = Td3Params(hidden=[8, 8], batch_size=4, replay_capacity=10)
    st = td3.init_td3(
        env.obs_dim, env.action_low, env.action_high, params,
        WiringMode.SAFE_ENV, Mitigation.NONE, 0.0,
        np.random.default_rng(0), np.random.default_rng(1),
    )
    checked = 0
    for k in range(300):
        if checked == 100:
            break
        s = env.reset(k)
        ss = env.safe_action_set(s)
        u_e = rng.uniform(env.action_low, env.action_high)
        if is_member(ss, u_e, s.x):
            continue
        u_b = project_or_raise(ss, s.x, u_e).u_phi

        a = safeguarded_step(env, env.reset(k), u_e)
        b = safeguarded_step(env, env.reset(k), u_b)
        assert a.result.info.intervention and not b.result.info.intervention
        assert np.array_equal(a.u_phi, b.u_phi)
        assert np.array_equal(a.result.next_state.x, b.result.next_state.x)
        assert a.result.reward == b.result.reward

        targets = []
        for ws in (a, b):
            st.replay = ReplayBuffer(4, env.obs_dim, env.action_dim)
            td3.store(st, Transition(
                x=env.observe(s), u=ws.u, u_phi=ws.u_phi, r=ws.result.reward,
                x_next=env.observe(ws.result.next_state), done=ws.result.done,
            ))
            batch = st.replay.take(np.array([0]))
            targets.append(td3.td3_targets(st, batch, np.zeros((1, env.action_dim))))
        assert np.array_equal(targets[0], targets[1])
        checked += 1
    assert checked == 100


def test_penalty_is_reported_and_only_subtracted_in_se():
    env = PendulumEnv.default()
    s = env.make_state([0.5, 0.1])
    h = 2.0 * U_PHI_PENDULUM ** 2
    plain = wired_step(env, s, [0.0], WiringMode.SAFE_ENV, Mitigation.NONE, w=2.0)
    pen = wired_step(env, s, [0.0], WiringMode.SAFE_ENV, Mitigation.PENALTY, w=2.0)
    sp = wired_step(env, s, [0.0], WiringMode.SAFE_POLICY, Mitigation.PENALTY, w=2.0)
    assert plain.result.info.penalty == pytest.approx(h, rel=1e-6)
    assert pen.result.reward == pytest.approx(plain.result.reward - h, rel=1e-6)
    assert sp.result.reward == plain.result.reward
    assert se_env_step(env, s, [0.0], Mitigation.PENALTY, w=2.0).reward == pen.result.reward


def test_no_penalty_without_intervention():
    env = PendulumEnv.default()
    s = env.make_state([0.0, 0.0])
    ws = wired_step(env, s, [1.0], WiringMode.SAFE_ENV, Mitigation.PENALTY, w=5.0)
    assert ws.result.info.penalty == 0.0
    assert not ws.result.info.intervention
    assert np.array_equal(ws.u_phi, [1.0])


def test_empty_safe_set_ends_episode():
    env = PendulumEnv.default()
    s = env.make_state([2.0, 5.0])
    ws = wired_step(env, s, [0.0], WiringMode.SAFE_ENV)
    assert ws.result.done and ws.result.info.outcome == "infeasible"
    assert ws.result.reward == 0.0
    assert ws.result.next_state is s and ws.safe_set is None
    # sin safeguard el paso se ejecuta
    raw = wired_step(env, s, [0.0], WiringMode.UNSAFE)
    assert raw.result.info.outcome == "ok" and raw.safe_set is None


def test_unsafe_clips_to_actuators():
    env = PendulumEnv.default()
    ws = wired_step(env, env.make_state([0.5, 0.1]), [20.0], WiringMode.UNSAFE)
    assert ws.u_phi[0] == 8.0 and ws.u[0] == 20.0


def test_sp_policy_act_returns_jacobian():
    env = PendulumEnv.default()
    s = env.make_state([0.5, 0.1])
    ss = env.safe_action_set(s)
    det = sp_policy_act(lambda o: np.array([0.0]), ss, s.x, env.observe(s))
    assert det.u_phi[0] == pytest.approx(U_PHI_PENDULUM, abs=1e-6)
    assert det.jacobian is not None and det.jacobian.J.shape == (1, 1)
    assert det.jacobian.J[0, 0] == pytest.approx(0.0, abs=1e-8)
    sto = sp_policy_act(lambda o: np.array([0.0]), ss, s.x, env.observe(s), mode="stochastic")
    assert sto.jacobian is None and np.array_equal(sto.u_phi, det.u_phi)

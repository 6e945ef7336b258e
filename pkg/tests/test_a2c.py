# tests/test_a2c.py
from __future__ import annotations

import numpy as np
import pytest

from app.core.constants import ADAM_EPS
from app.domain.models import A2cParams
from app.domain.types import Mitigation, WiringMode
from app.application.envs.pendulum import PendulumEnv
from app.application.rl import a2c
from app.application.rl.advantages import gae
from app.application.training import train_a2c


def _flats(cfg, env):
    seen = []
    train_a2c(cfg, env, 0, on_update=lambda st: seen.append(st.policy.flat.copy()))
    return seen


def test_safe_env_and_safe_policy_produce_same_parameters(tiny):
    env = PendulumEnv.default()
    se = _flats(tiny(algorithm="a2c", wiring="se", total_steps=500, eval_interval=500), env)
    sp = _flats(tiny(algorithm="a2c", wiring="sp", total_steps=500, eval_interval=500), env)
    assert len(se) == len(sp) == 100
    for a, b in zip(se, sp):
        assert np.max(np.abs(a - b)) <= 1e-12


def test_gae_by_hand():
    adv = gae([1.0, 1.0], [0.5, 0.5, 0.5], [False, False], gamma=0.9, lam=0.8)
    d1 = 1.0 + 0.9 * 0.5 - 0.5
    d0 = 1.0 + 0.9 * 0.5 - 0.5
    assert adv[1] == pytest.approx(d1)
    assert adv[0] == pytest.approx(d0 + 0.9 * 0.8 * d1)
    done = gae([1.0, 1.0], [0.5, 0.5, 0.5], [True, False], gamma=0.9, lam=0.8)
    assert done[0] == pytest.approx(1.0 - 0.5)


def test_penalty_head_reduces_advantage():
    env = PendulumEnv.default()
    params = A2cParams(n_steps=3, hidden=[4])
    st = a2c.init_a2c(2, 1, params, WiringMode.SAFE_POLICY, Mitigation.PENC, 1.0, np.random.default_rng(0))
    assert st.pen_value is not None
    ro = a2c.Rollout()
    s = env.make_state([0.5, 0.1])
    ss = env.safe_action_set(s)
    for _ in range(3):
        ro.add(s.x, [0.0], -1.0, 4.0, False, ss)
    ro.last_obs = s.x.copy()
    adv, _, pen_returns = a2c.advantages(st, ro)
    v = a2c._values(st.value, np.vstack(ro.obs + [ro.last_obs]))
    plain = gae(ro.r, v, ro.done, params.gamma, params.lam)
    assert pen_returns is not None
    assert np.all(adv < plain)


def test_update_resets_rollout_and_counts():
    params = A2cParams(n_steps=2, hidden=[4])
    st = a2c.init_a2c(2, 1, params, WiringMode.SAFE_ENV, Mitigation.NONE, 0.0, np.random.default_rng(0))
    st.rollout.add([0.1, 0.0], [0.2], -0.1, 0.0, False, None)
    st.rollout.add([0.1, 0.1], [0.1], -0.2, 0.0, False, None)
    st.rollout.last_obs = np.array([0.1, 0.2])
    a2c.a2c_update(st)
    assert st.n_updates == 1 and len(st.rollout) == 0
    assert np.isfinite(st.last_actor_loss) and np.isfinite(st.last_critic_loss)
    with pytest.raises(ValueError):
        a2c.a2c_update(st)


def test_blocks_restore_policy():
    params = A2cParams(hidden=[4])
    st = a2c.init_a2c(2, 1, params, WiringMode.SAFE_POLICY, Mitigation.PENC, 1.0, np.random.default_rng(0))
    blocks = a2c.a2c_blocks(st)
    other = a2c.init_a2c(2, 1, params, WiringMode.SAFE_POLICY, Mitigation.PENC, 1.0, np.random.default_rng(9))
    a2c.a2c_load_blocks(other, blocks)
    assert np.array_equal(other.policy.flat, st.policy.flat)
    assert np.array_equal(other.pen_value.flat, st.pen_value.flat)


def _gae_double_sum(r, v, done, gamma, lam):
    T = len(r)
    out = np.zeros(T)
    for t in range(T):
        coef = 1.0
        for k in range(t, T):
            delta = r[k] + gamma * v[k + 1] * (1.0 - done[k]) - v[k]
            out[t] += coef * delta
            if done[k]:
                break
            coef *= gamma * lam
    return out


def test_gae_matches_double_sum(rng):
    for _ in range(5):
        r = rng.normal(size=20)
        v = rng.normal(size=21)
        done = rng.random(20) < 0.15
        got = gae(r, v, done, gamma=0.97, lam=0.9)
        assert np.allclose(got, _gae_double_sum(r, v, done, 0.97, 0.9), rtol=0.0, atol=1e-12)


def test_one_step_update_is_reinforce_with_baseline():
    params = A2cParams(n_steps=1, hidden=[], gamma=0.9)
    st = a2c.init_a2c(2, 1, params, WiringMode.SAFE_ENV, Mitigation.NONE, 0.0, np.random.default_rng(4))
    x, u, r = np.array([0.3, -0.2]), np.array([0.4]), -1.5

    # media y valor lineales: mu = W x + b, V = a x + c
    (W, b), = st.policy.mean.layers()
    (a, c), = st.value.layers()
    mu = W @ x + b
    var = st.policy.std ** 2
    v = float((a @ x + c)[0])
    adv = r - v  # episodio terminado: sin bootstrap

    # descenso sobre -adv log pi(u|x)
    g_mu = -adv * (u - mu) / var
    g_pol = np.zeros(st.policy.flat.shape[0])
    w_sl, b_sl, _ = st.policy.mean.arch.layer_slices()[0]
    g_pol[w_sl] = np.outer(g_mu, x).ravel()
    g_pol[b_sl] = g_mu
    g_pol[st.policy.mean.arch.n_params:] = -adv * ((u - mu) ** 2 / var - 1.0)

    g_val = np.zeros(st.value.arch.n_params)
    w_sl, b_sl, _ = st.value.arch.layer_slices()[0]
    e = params.value_coef * 2.0 * (v - r)
    g_val[w_sl] = e * x
    g_val[b_sl] = e

    # primer paso de Adam: m_hat = g, v_hat = g^2
    pol_expected = st.policy.flat - params.actor_lr * g_pol / (np.abs(g_pol) + ADAM_EPS)
    val_expected = st.value.flat - params.critic_lr * g_val / (np.abs(g_val) + ADAM_EPS)

    ro = a2c.Rollout()
    ro.add(x, u, r, 0.0, True, None)
    ro.last_obs = np.array([0.35, -0.1])
    a2c.a2c_update(st, ro)
    assert np.allclose(st.policy.flat, pol_expected, rtol=0.0, atol=1e-10)
    assert np.allclose(st.value.flat, val_expected, rtol=0.0, atol=1e-10)

# tests/test_trends.py
"""Tendencias a escala de escritorio (lentas: pytest -m slow)."""
from __future__ import annotations

import pytest

from app.application.envs.pendulum import PendulumEnv
from app.application.pipeline import run_experiment
from app.application.training import train_a2c, train_td3
from app.domain.models import ExperimentConfig, Td3Params
from conftest import tiny_config


@pytest.mark.slow
@pytest.mark.parametrize("wiring", ["se", "sp"])
def test_td3_pendulum_improves_without_violations(wiring):
    cfg = tiny_config(
        wiring=wiring,
        total_steps=15_000,
        eval_interval=5_000,
        td3=Td3Params(warmup_steps=1_000, batch_size=64, replay_capacity=20_000, hidden=[32, 32]),
    )
    out = train_td3(cfg, PendulumEnv.default(), 0)
    first, last = out.rows[0]["eval_return_mean"], out.rows[-1]["eval_return_mean"]
    assert last >= first
    assert all(r["violations"] == 0 for r in out.rows)


@pytest.mark.slow
def test_unsafe_wiring_violates():
    cfg = tiny_config(algorithm="a2c", wiring="unsafe", total_steps=2_000, eval_interval=2_000)
    out = train_a2c(cfg, PendulumEnv.default(), 0)
    assert out.final.violations > 0


# ------------------------------
# Orden de IQM entre variantes (3 semillas de entrenamiento x 5 de evaluación)
# ------------------------------
DESK_TD3 = Td3Params(batch_size=64, hidden=[64, 64])
W_SWEEP = (0.1, 1.0)


def _iqm(tmp_path, **kw) -> float:
    cfg = ExperimentConfig(output_dir=str(tmp_path), **kw)
    return run_experiment(cfg).iqm


def _best_iqm(tmp_path, **kw) -> float:
    return max(_iqm(tmp_path, w=w, **kw) for w in W_SWEEP)


@pytest.mark.slow
def test_pendulum_td3_safe_env_reaches_desk_threshold(tmp_path):
    assert _iqm(tmp_path, env="pendulum", algorithm="td3", wiring="se", td3=DESK_TD3) >= -30.0


@pytest.mark.slow
def test_quadrotor_td3_ordering(tmp_path):
    base = dict(env="quadrotor", algorithm="td3", td3=DESK_TD3)
    se = _iqm(tmp_path, wiring="se", **base)
    sp = _iqm(tmp_path, wiring="sp", **base)
    penc = _best_iqm(tmp_path, wiring="sp", mitigation="penc", **base)
    assert se > sp
    assert penc > sp


@pytest.mark.slow
def test_seeker_td3_projection_loss_beats_plain_safe_policy(tmp_path):
    base = dict(env="seeker", algorithm="td3", wiring="sp", td3=DESK_TD3)
    sp = _iqm(tmp_path, **base)
    psl = _best_iqm(tmp_path, mitigation="psl", **base)
    assert psl > sp


@pytest.mark.slow
def test_pendulum_a2c_penalty_beats_plain_safe_env(tmp_path):
    base = dict(env="pendulum", algorithm="a2c", wiring="se")
    plain = _iqm(tmp_path, **base)
    penalized = _iqm(tmp_path, mitigation="penalty", w=0.1, **base)
    assert penalized > plain

# tests/test_penalty.py
from __future__ import annotations

import numpy as np
import pytest

from app.domain.errors import DimensionError
from app.domain.types import Transition
from app.application.rl.penalty import PenaltyFn, penalty, psl_action_grad
from app.application.rl.replay import ReplayBuffer
from oracles import central_fd


def test_penalty_values():
    assert penalty([1.0, 2.0], [1.0, 2.0], 10.0) == 0.0
    assert penalty([3.0, 0.0], [0.0, 4.0], 0.5) == pytest.approx(12.5)
    with pytest.raises(DimensionError):
        penalty([1.0], [1.0, 2.0], 1.0)


def test_psl_gradient_on_box_facet():
    # caja [-1, 1]^2, u fuera por la derecha: Phi(u) = (1, u_2), J = diag(0, 1)
    proj = lambda v: np.array([min(v[0], 1.0), v[1]])  # noqa: E731
    xi = lambda v: 2.0 * float(np.sum((v - proj(v)) ** 2))  # noqa: E731
    u = np.array([1.7, 0.3])
    g = psl_action_grad(u, proj(u), np.diag([0.0, 1.0]), 2.0)
    fd = central_fd(lambda v: np.array([xi(v)]), u)[0]
    assert np.allclose(g, fd, atol=1e-5)


def test_penalty_fn_validation():
    assert PenaltyFn(2.0)([1.0], [0.0]) == 2.0
    with pytest.raises(ValueError):
        PenaltyFn(-1.0)
    with pytest.raises(ValueError):
        PenaltyFn(1.0, kind="absolute")


def _tr(i: int) -> Transition:
    x = np.array([float(i), 0.0])
    return Transition(x=x, u=np.array([0.1 * i]), u_phi=np.array([0.0]), r=-float(i), x_next=x + 1.0, done=i % 2 == 0)


def test_replay_wraps_around():
    buf = ReplayBuffer(3, 2, 1)
    for i in range(5):
        buf.add(_tr(i))
    assert len(buf) == 3
    assert sorted(buf.r.tolist()) == [-4.0, -3.0, -2.0]
    b = buf.sample(10, np.random.default_rng(0))
    assert len(b) == 10 and set(b.r.tolist()) <= {-4.0, -3.0, -2.0}


def test_replay_rejects_bad_transitions():
    buf = ReplayBuffer(2, 2, 1)
    with pytest.raises(ValueError):
        buf.sample(1, np.random.default_rng(0))
    with pytest.raises(DimensionError):
        buf.add(Transition(x=np.zeros(3), u=np.zeros(1), u_phi=np.zeros(1), r=0.0, x_next=np.zeros(3), done=False))
    with pytest.raises(ValueError):
        ReplayBuffer(0, 2, 1)

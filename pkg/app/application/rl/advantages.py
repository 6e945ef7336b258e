# app/application/rl/advantages.py
from __future__ import annotations

import numpy as np

from app.domain.errors import DimensionError


def gae(rewards, values, dones, gamma: float, lam: float) -> np.ndarray:
    """
    Ventajas GAE sobre un rollout finito.

    rewards, dones: longitud T. values: longitud T + 1 (el último es el
    valor de arranque del estado final; se ignora si el episodio terminó).
    """
    r = np.asarray(rewards, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    d = np.asarray(dones, dtype=np.float64)
    T = r.shape[0]
    if v.shape[0] != T + 1 or d.shape[0] != T:
        raise DimensionError(f"longitudes inconsistentes: r={T}, v={v.shape[0]}, done={d.shape[0]}")
    adv = np.zeros(T)
    acc = 0.0
    for t in range(T - 1, -1, -1):
        nonterminal = 1.0 - d[t]
        delta = r[t] + gamma * v[t + 1] * nonterminal - v[t]
        acc = delta + gamma * lam * nonterminal * acc
        adv[t] = acc
    return adv

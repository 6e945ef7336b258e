# app/application/rl/replay.py
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from app.domain.errors import DimensionError
from app.domain.types import SafeActionSet, Transition


@dataclass(frozen=True)
class Batch:
    obs: np.ndarray
    u: np.ndarray
    u_phi: np.ndarray
    r: np.ndarray
    obs_next: np.ndarray
    done: np.ndarray
    penalty: np.ndarray
    safe_set: List[Optional[SafeActionSet]]
    safe_set_next: List[Optional[SafeActionSet]]

    def __len__(self) -> int:
        return int(self.r.shape[0])


class ReplayBuffer:
    """Buffer circular de transiciones; muestreo uniforme con el RNG del llamador."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int) -> None:
        if capacity <= 0:
            raise ValueError("capacidad del replay debe ser > 0")
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.u = np.zeros((capacity, action_dim))
        self.u_phi = np.zeros((capacity, action_dim))
        self.r = np.zeros(capacity)
        self.obs_next = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.penalty = np.zeros(capacity)
        self.safe_set: List[Optional[SafeActionSet]] = [None] * capacity
        self.safe_set_next: List[Optional[SafeActionSet]] = [None] * capacity
        self._next = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, tr: Transition) -> None:
        if tr.x.shape != self.obs.shape[1:] or tr.u.shape != self.u.shape[1:]:
            raise DimensionError("transición con dimensiones distintas a las del buffer")
        i = self._next
        self.obs[i] = tr.x
        self.u[i] = tr.u
        self.u_phi[i] = tr.u_phi
        self.r[i] = tr.r
        self.obs_next[i] = tr.x_next
        self.done[i] = float(tr.done)
        self.penalty[i] = tr.penalty
        self.safe_set[i] = tr.safe_set
        self.safe_set_next[i] = tr.safe_set_next
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def take(self, idx: np.ndarray) -> Batch:
        return Batch(
            obs=self.obs[idx],
            u=self.u[idx],
            u_phi=self.u_phi[idx],
            r=self.r[idx],
            obs_next=self.obs_next[idx],
            done=self.done[idx],
            penalty=self.penalty[idx],
            safe_set=[self.safe_set[i] for i in idx],
            safe_set_next=[self.safe_set_next[i] for i in idx],
        )

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if self.size == 0:
            raise ValueError("replay vacío")
        idx = rng.integers(0, self.size, size=batch_size)
        return self.take(idx)

# app/application/rl/penalty.py
"""
Penalización de proyección h = w ||u - u_phi||^2 y su gradiente respecto
a la acción previa a la proyección (pérdida por muestra).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from app.domain.errors import DimensionError
from app.domain.types import as_vector


def penalty(u, u_phi, w: float) -> float:
    """0 exacto si la acción no se movió; si no, w ||u - u_phi||^2."""
    u, u_phi = as_vector(u, "u"), as_vector(u_phi, "u_phi")
    if u.shape != u_phi.shape:
        raise DimensionError("u y u_phi con dimensiones distintas")
    d = u - u_phi
    return float(w * (d @ d))


def psl_action_grad(u, u_phi, J: np.ndarray, w: float) -> np.ndarray:
    """
    Gradiente de xi(u) = w ||u - Phi(u)||^2 respecto a u, con dPhi/du = J:
    2 w (I - J)' (u - u_phi).
    """
    u, u_phi = as_vector(u, "u"), as_vector(u_phi, "u_phi")
    J = np.asarray(J, dtype=np.float64)
    if J.shape != (u.shape[0], u.shape[0]):
        raise DimensionError("Jacobiano incompatible con la acción")
    return 2.0 * w * (np.eye(u.shape[0]) - J).T @ (u - u_phi)


@dataclass(frozen=True)
class PenaltyFn:
    w: float
    kind: str = "squared_distance"

    def __post_init__(self) -> None:
        if self.w < 0:
            raise ValueError("w debe ser >= 0")
        if self.kind != "squared_distance":
            raise ValueError(f"tipo de penalización no soportado: {self.kind}")

    def __call__(self, u, u_phi) -> float:
        return penalty(u, u_phi, self.w)

    def action_grad(self, u, u_phi, J: np.ndarray) -> np.ndarray:
        return psl_action_grad(u, u_phi, J, self.w)

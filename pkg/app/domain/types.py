# app/domain/types.py
"""
Tipos de valor numéricos del safeguard y de los entornos.

Son dataclasses inmutables sobre arrays de numpy (float64). Los modelos
de configuración/resumen (pydantic) viven en app/domain/models.py.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from app.domain.errors import DimensionError


def as_vector(x, name: str = "x") -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimensionError(f"'{name}' debe ser un vector, forma recibida {v.shape}")
    return v


# ------------------------------
# Zonotopos
# ------------------------------
@dataclass(frozen=True)
class Zonotope:
    """
    Zonotopo en representación de generadores <c, B> = {c + B beta : |beta|_inf <= 1}.
    Cero generadores representa un punto.
    """

    center: np.ndarray
    generators: np.ndarray

    def __post_init__(self) -> None:
        c = as_vector(self.center, "center")
        g = np.asarray(self.generators, dtype=np.float64)
        if g.size == 0:
            g = np.zeros((c.shape[0], 0))
        if g.ndim != 2 or g.shape[0] != c.shape[0]:
            raise DimensionError(
                f"generadores {g.shape} incompatibles con centro de dimensión {c.shape[0]}"
            )
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(g))):
            raise ValueError("El zonotopo contiene entradas no finitas.")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", g)

    @property
    def dim(self) -> int:
        return int(self.center.shape[0])

    @property
    def n_generators(self) -> int:
        return int(self.generators.shape[1])

    @classmethod
    def point(cls, c) -> "Zonotope":
        c = as_vector(c, "center")
        return cls(c, np.zeros((c.shape[0], 0)))

    @classmethod
    def box(cls, low, high) -> "Zonotope":
        lo, hi = as_vector(low, "low"), as_vector(high, "high")
        if lo.shape != hi.shape:
            raise DimensionError("low/high con dimensiones distintas")
        return cls((lo + hi) / 2.0, np.diag((hi - lo) / 2.0))


# ------------------------------
# Restricciones lineales del QP
# ------------------------------
@dataclass(frozen=True)
class ContainmentConstraints:
    """
    Restricciones lineales sobre el vector de decisión z = [u_tilde, aux]:

        A_eq z = b_eq
        G z <= h

    Los primeros `n_u` componentes de z son la acción; el resto son las
    variables auxiliares (Gamma, omega, nu y sus epígrafos |.|).
    """

    A_eq: np.ndarray
    b_eq: np.ndarray
    G: np.ndarray
    h: np.ndarray
    n_u: int
    labels: Dict[str, slice] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = self.A_eq.shape[1]
        if self.G.shape[1] != n:
            raise DimensionError("A_eq y G deben tener el mismo número de columnas")
        if self.A_eq.shape[0] != self.b_eq.shape[0] or self.G.shape[0] != self.h.shape[0]:
            raise DimensionError("filas de restricciones inconsistentes con sus lados derechos")
        if not 0 <= self.n_u <= n:
            raise DimensionError("n_u fuera de rango")

    @property
    def n_vars(self) -> int:
        return int(self.A_eq.shape[1])

    @property
    def n_eq(self) -> int:
        return int(self.A_eq.shape[0])

    @property
    def n_ineq(self) -> int:
        return int(self.G.shape[0])


# ------------------------------
# Conjuntos de acciones seguras
# ------------------------------
@dataclass(frozen=True)
class AffineDynamics:
    """
    Paso de un tiempo afín: x' = A x + B u + c + E w, con w en el zonotopo W.
    """

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    E: np.ndarray

    def __post_init__(self) -> None:
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.B.shape[0] != n or self.c.shape != (n,) or self.E.shape[0] != n:
            raise DimensionError("dinámica afín con dimensiones inconsistentes")

    @property
    def state_dim(self) -> int:
        return int(self.A.shape[0])

    @property
    def action_dim(self) -> int:
        return int(self.B.shape[1])


class SafeSetMode(str, Enum):
    DIRECT = "direct"
    REACH = "reach"


@dataclass(frozen=True)
class SafeActionSet:
    """
    U^phi_x en uno de dos modos:
      - DIRECT: zonotopo de acciones `u_set`.
      - REACH: Reach(x, u, W) contenido en `x_safe` bajo `dynamics`, con cotas de actuador opcionales.
    """

    mode: SafeSetMode
    action_dim: int
    u_set: Optional[Zonotope] = None
    x: Optional[np.ndarray] = None
    dynamics: Optional[AffineDynamics] = None
    disturbance: Optional[Zonotope] = None
    x_safe: Optional[Zonotope] = None
    u_low: Optional[np.ndarray] = None
    u_high: Optional[np.ndarray] = None

    @classmethod
    def direct(cls, u_set: Zonotope) -> "SafeActionSet":
        return cls(SafeSetMode.DIRECT, u_set.dim, u_set=u_set)

    @classmethod
    def reach(
        cls,
        x,
        dynamics: AffineDynamics,
        disturbance: Zonotope,
        x_safe: Zonotope,
        u_low=None,
        u_high=None,
    ) -> "SafeActionSet":
        return cls(
            SafeSetMode.REACH,
            dynamics.action_dim,
            x=as_vector(x, "x"),
            dynamics=dynamics,
            disturbance=disturbance,
            x_safe=x_safe,
            u_low=None if u_low is None else as_vector(u_low, "u_low"),
            u_high=None if u_high is None else as_vector(u_high, "u_high"),
        )


# ------------------------------
# Soluciones del safeguard
# ------------------------------
class SolveStatus(str, Enum):
    SOLVED = "Solved"
    INFEASIBLE = "Infeasible"
    MAX_ITER = "MaxIter"


@dataclass(frozen=True)
class ProjectionSolution:
    u_phi: np.ndarray
    z: np.ndarray
    duals_eq: np.ndarray
    duals_ineq: np.ndarray
    active_set: List[int]
    kkt_residual: float
    iterations: int
    status: SolveStatus
    # True si u ya era factible y se devolvió tal cual
    short_circuit: bool = False

    @property
    def solved(self) -> bool:
        return self.status == SolveStatus.SOLVED


@dataclass(frozen=True)
class SafeguardJacobian:
    J: np.ndarray
    active_rank: int
    normal_basis: np.ndarray
    # se descartaron filas débilmente activas o se usó mínimos cuadrados
    degenerate: bool = False


# ------------------------------
# Entornos y transiciones
# ------------------------------
@dataclass
class EnvState:
    """Estado de un episodio. Cada episodio posee su propio stream de RNG."""

    x: np.ndarray
    t: int
    rng: np.random.Generator
    extras: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class StepInfo:
    applied_action: np.ndarray
    intervention: bool
    penalty: float
    outcome: str = "ok"  # ok | goal | infeasible | collision | horizon


@dataclass(frozen=True)
class StepResult:
    next_state: EnvState
    reward: float
    done: bool
    info: StepInfo


class WiringMode(str, Enum):
    UNSAFE = "unsafe"
    SAFE_ENV = "se"
    SAFE_POLICY = "sp"


class Mitigation(str, Enum):
    NONE = "none"
    PENALTY = "penalty"
    PSL = "psl"
    PENC = "penc"


@dataclass(frozen=True)
class Transition:
    """
    Registro de replay. `x` y `x_next` son observaciones del agente.
    En SafeEnv el crítico ve `u`; en SafePolicy ve `u_phi`. Los conjuntos
    seguros se guardan para proyectar en la actualización SP.
    """

    x: np.ndarray
    u: np.ndarray
    u_phi: np.ndarray
    r: float
    x_next: np.ndarray
    done: bool
    penalty: float = 0.0
    jacobian: Optional[np.ndarray] = None
    safe_set: Optional[SafeActionSet] = None
    safe_set_next: Optional[SafeActionSet] = None

# app/application/min_example.py
"""
Ejemplo mínimo de mejora de política en un estado fijo.

Se aprende un crítico q(u) por regresión supervisada sobre pares
(u, proxy de retorno) generados con una política de comportamiento
uniforme y después se hacen pasos de ascenso de gradiente sobre un tensor
de acción libre con el wiring / mitigación elegidos. Las iteraciones se
emiten como CSV (sin gráficos).

Estados fijos:
  - quadrotor: equilibrio x*, dinámica determinista. Óptimo dentro del
    conjunto seguro (tarea y seguridad alineadas).
  - seeker: agente frente a un obstáculo con la meta detrás. Óptimo fuera
    del conjunto seguro.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from app.domain.errors import ConfigError, DimensionError, InfeasibleProjection
from app.domain.types import EnvState, Mitigation, SafeActionSet, WiringMode, Zonotope, as_vector
from app.infrastructure.files import write_csv
from app.application.envs.base import Env
from app.application.envs.quadrotor import X_STAR, QuadrotorEnv
from app.application.envs.seeker import SeekerEnv
from app.application.rl.networks import MlpParams, Optimizer, init_mlp, mlp_backward, mlp_forward
from app.application.rl.penalty import penalty, psl_action_grad
from app.application.safety.projection import project_or_raise
from app.application.safety.sensitivity import project_and_jacobian
from app.application.safety.zonotope import constraints_for

N_SAMPLES = 2000
FIT_ITERS = 2000
FIT_LR = 3e-3
HIDDEN = (64, 64)

CSV_COLUMNS = ["step", "u_0", "u_1", "u_phi_0", "u_phi_1", "objective", "penalty", "signed_distance"]

# combinaciones que admite el ejemplo
VARIANTS: Tuple[Tuple[WiringMode, Mitigation], ...] = (
    (WiringMode.UNSAFE, Mitigation.NONE),
    (WiringMode.SAFE_ENV, Mitigation.NONE),
    (WiringMode.SAFE_ENV, Mitigation.PENALTY),
    (WiringMode.SAFE_POLICY, Mitigation.NONE),
    (WiringMode.SAFE_POLICY, Mitigation.PSL),
    (WiringMode.SAFE_POLICY, Mitigation.PENC),
)


@dataclass(frozen=True)
class MinExampleSetup:
    env: Env
    state: EnvState
    safe_set: SafeActionSet
    u0: np.ndarray
    sample_low: np.ndarray
    sample_high: np.ndarray
    lr: float = 0.1
    w: float = 1.0


# ------------------------------
# Estados fijos
# ------------------------------
def quadrotor_setup(env: Optional[QuadrotorEnv] = None) -> MinExampleSetup:
    env = env or QuadrotorEnv.default()
    s = env.make_state(X_STAR.copy())
    # sin perturbación: conjunto seguro de la dinámica determinista
    ss = SafeActionSet.reach(
        s.x, env.dynamics(), Zonotope.point(np.zeros(2)), env.x_safe, env.action_low, env.action_high
    )
    return MinExampleSetup(
        env=env,
        state=s,
        safe_set=ss,
        u0=np.array([5.0, 11.5]),
        sample_low=env.action_low.copy(),
        sample_high=env.action_high.copy(),
    )


def seeker_setup(env: Optional[SeekerEnv] = None) -> MinExampleSetup:
    env = env or SeekerEnv.default()
    extras = {
        "goal": np.array([3.0, 0.0]),
        "obstacles": np.array([[0.95, 0.0]]),
        "radii": np.array([0.6]),
    }
    s = env.make_state([0.0, 0.0, 0.5, 0.0], **extras)
    return MinExampleSetup(
        env=env,
        state=s,
        safe_set=env.safe_action_set(s),
        u0=np.array([0.9, 0.8]),
        sample_low=env.action_low.copy(),
        sample_high=env.action_high.copy(),
    )


SETUPS = {"quadrotor": quadrotor_setup, "seeker": seeker_setup}


def make_setup(env: str) -> MinExampleSetup:
    if env not in SETUPS:
        raise ConfigError(f"ejemplo mínimo no disponible para '{env}' (opciones: {sorted(SETUPS)})")
    return SETUPS[env]()


# ------------------------------
# Geometría del conjunto seguro (2-D)
# ------------------------------
def safe_polygon(safe_set: SafeActionSet, x=None, n_dirs: int = 64) -> np.ndarray:
    """
    Vértices del conjunto de acciones seguras (solo m = 2) por puntos de
    soporte en `n_dirs` direcciones.
    """
    if safe_set.action_dim != 2:
        raise DimensionError("safe_polygon solo admite acciones 2-D")
    cons = constraints_for(safe_set, x)
    pts = []
    for a in np.linspace(0.0, 2.0 * np.pi, n_dirs, endpoint=False):
        c = np.zeros(cons.n_vars)
        c[:2] = -np.array([np.cos(a), np.sin(a)])
        res = linprog(
            c=c,
            A_ub=cons.G if cons.n_ineq else None,
            b_ub=cons.h if cons.n_ineq else None,
            A_eq=cons.A_eq if cons.n_eq else None,
            b_eq=cons.b_eq if cons.n_eq else None,
            bounds=[(None, None)] * cons.n_vars,
            method="highs",
        )
        if res.status != 0:
            raise InfeasibleProjection("conjunto seguro vacío o no acotado en el estado fijo")
        pts.append(res.x[:2])
    P = np.unique(np.round(np.array(pts), 12), axis=0)
    return P[ConvexHull(P).vertices]


def polygon_halfspaces(vertices: np.ndarray) -> np.ndarray:
    """Filas [n_x, n_y, off] con n unitaria: dentro si n.u + off <= 0."""
    return ConvexHull(vertices).equations


def signed_distance(u, u_phi, halfspaces: np.ndarray) -> float:
    """Fuera: ||u - u_phi|| (> 0). Dentro: -(distancia a la frontera)."""
    u = as_vector(u, "u")
    out = float(np.linalg.norm(u - as_vector(u_phi, "u_phi")))
    if out > 0.0:
        return out
    return float(np.max(halfspaces[:, :2] @ u + halfspaces[:, 2]))


# ------------------------------
# Crítico supervisado
# ------------------------------
@dataclass
class FittedCritic:
    """MLP sobre entradas normalizadas a [-1, 1] y objetivos estandarizados."""

    net: MlpParams
    mid: np.ndarray
    half: np.ndarray
    y_mean: float
    y_std: float
    loss: float = float("nan")

    def value(self, u) -> float:
        z = (as_vector(u, "u") - self.mid) / self.half
        return float(mlp_forward(self.net, z)[0] * self.y_std + self.y_mean)

    def grad(self, u) -> np.ndarray:
        z = (as_vector(u, "u") - self.mid) / self.half
        _, g = mlp_backward(self.net, z, np.ones(1))
        return g * self.y_std / self.half


def fit_critic(
    U: np.ndarray,
    y: np.ndarray,
    low: np.ndarray,
    high: np.ndarray,
    rng: np.random.Generator,
    iters: int = FIT_ITERS,
    lr: float = FIT_LR,
) -> FittedCritic:
    """Regresión de mínimos cuadrados a lote completo con Adam."""
    mid, half = (low + high) / 2.0, (high - low) / 2.0
    Z = (U - mid) / half
    y_mean = float(np.mean(y))
    y_std = float(np.std(y)) or 1.0
    t = (y - y_mean) / y_std
    net = init_mlp((U.shape[1],) + HIDDEN + (1,), rng)
    opt = Optimizer(lr)
    loss = float("nan")
    for _ in range(iters):
        diff = mlp_forward(net, Z)[:, 0] - t
        loss = float(np.mean(diff * diff))
        g, _ = mlp_backward(net, Z, (2.0 * diff / diff.shape[0]).reshape(-1, 1))
        net = opt.step(net, g)
    return FittedCritic(net, mid, half, y_mean, y_std, loss)


@dataclass
class BehaviorData:
    """Muestras de la política de comportamiento y sus proyecciones."""

    U: np.ndarray
    U_phi: np.ndarray
    proxy_u: np.ndarray
    proxy_phi: np.ndarray
    dist2: np.ndarray


def behavior_data(setup: MinExampleSetup, n: int = N_SAMPLES, seed: int = 0) -> BehaviorData:
    rng = np.random.default_rng(seed)
    U = rng.uniform(setup.sample_low, setup.sample_high, size=(n, setup.u0.shape[0]))
    U_phi = np.array([project_or_raise(setup.safe_set, setup.state.x, u).u_phi for u in U])
    env, s = setup.env, setup.state
    proxy_u = np.array([env.return_proxy(s, u) for u in U])
    proxy_phi = np.array([env.return_proxy(s, u) for u in U_phi])
    dist2 = np.sum((U - U_phi) ** 2, axis=1)
    return BehaviorData(U, U_phi, proxy_u, proxy_phi, dist2)


# ------------------------------
# Mejora de política
# ------------------------------
@dataclass
class MinExampleResult:
    wiring: WiringMode
    mitigation: Mitigation
    iterates: pd.DataFrame
    critic_loss: float
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def final(self) -> pd.Series:
        return self.iterates.iloc[-1]


def _critics(setup: MinExampleSetup, data: BehaviorData, wiring: WiringMode, mitigation: Mitigation, seed: int):
    rng = np.random.default_rng(seed)
    lo, hi = setup.sample_low, setup.sample_high
    w = setup.w
    q_pen = None
    if wiring == WiringMode.UNSAFE:
        q = fit_critic(data.U, data.proxy_u, lo, hi, rng)
    elif wiring == WiringMode.SAFE_ENV:
        # el crítico solo ve u; el retorno es el de la acción proyectada
        y = data.proxy_phi - (w * data.dist2 if mitigation == Mitigation.PENALTY else 0.0)
        q = fit_critic(data.U, y, lo, hi, rng)
    else:
        q = fit_critic(data.U_phi, data.proxy_phi, lo, hi, rng)
        if mitigation == Mitigation.PENC:
            q_pen = fit_critic(data.U, w * data.dist2, lo, hi, rng)
    return q, q_pen


def min_example(
    env: str,
    wiring: WiringMode,
    mitigation: Mitigation = Mitigation.NONE,
    steps: int = 50,
    setup: Optional[MinExampleSetup] = None,
    data: Optional[BehaviorData] = None,
    seed: int = 0,
    out_csv: Optional[Path] = None,
) -> MinExampleResult:
    """
    Ascenso de gradiente sobre u (paso `setup.lr`) maximizando el objetivo
    aprendido según el wiring:

      unsafe / se: u += lr dq/du
      sp:          u += lr J' dq/du(u_phi)
        psl:       ... - lr 2w (I - J)'(u - u_phi)
        penc:      ... - lr dq_pen/du(u)

    La fila 0 es la acción inicial. `objective` es el proxy real en la
    acción ejecutada (u en unsafe, u_phi en los demás).
    """
    if (wiring, mitigation) not in VARIANTS:
        raise ConfigError(f"combinación no soportada: {wiring.value}/{mitigation.value}")
    setup = setup or make_setup(env)
    data = data or behavior_data(setup, seed=seed)
    q, q_pen = _critics(setup, data, wiring, mitigation, seed + 1)
    halfspaces = polygon_halfspaces(safe_polygon(setup.safe_set, setup.state.x))
    x, s, w, lr = setup.state.x, setup.state, setup.w, setup.lr

    rows: List[dict] = []
    u = setup.u0.astype(np.float64).copy()
    for k in range(steps + 1):
        if wiring == WiringMode.SAFE_POLICY:
            sol, jac = project_and_jacobian(setup.safe_set, x, u)
            u_phi = sol.u_phi
        else:
            u_phi = project_or_raise(setup.safe_set, x, u).u_phi
        executed = u if wiring == WiringMode.UNSAFE else u_phi
        rows.append({
            "step": k,
            "u_0": u[0],
            "u_1": u[1],
            "u_phi_0": u_phi[0],
            "u_phi_1": u_phi[1],
            "objective": setup.env.return_proxy(s, executed),
            "penalty": penalty(u, u_phi, w),
            "signed_distance": signed_distance(u, u_phi, halfspaces),
        })
        if k == steps:
            break
        if wiring == WiringMode.SAFE_POLICY:
            g = jac.J.T @ q.grad(u_phi)
            if mitigation == Mitigation.PSL:
                g = g - psl_action_grad(u, u_phi, jac.J, w)
            elif mitigation == Mitigation.PENC:
                g = g - q_pen.grad(u)
        else:
            g = q.grad(u)
        u = u + lr * g

    df = pd.DataFrame(rows, columns=CSV_COLUMNS)
    if out_csv is not None:
        write_csv(Path(out_csv), df)
    extra = {"penalty_critic_loss": q_pen.loss} if q_pen is not None else {}
    return MinExampleResult(wiring, mitigation, df, q.loss, extra)


def run_all(env: str, out_dir: Path, steps: int = 50, seed: int = 0) -> Dict[str, MinExampleResult]:
    """Todas las variantes sobre los mismos datos de comportamiento; un CSV por variante."""
    setup = make_setup(env)
    data = behavior_data(setup, seed=seed)
    out: Dict[str, MinExampleResult] = {}
    for wiring, mit in VARIANTS:
        name = f"{env}-{wiring.value}-{mit.value}"
        out[name] = min_example(
            env, wiring, mit, steps, setup=setup, data=data, seed=seed, out_csv=Path(out_dir) / f"{name}.csv"
        )
    return out

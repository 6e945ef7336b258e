# app/application/safety/projection.py
"""
Proyección de una acción sobre el conjunto seguro:

    u_phi = argmin 1/2 ||u_tilde - u||^2   s.a. restricciones de contención

Backend: método dual de conjunto activo (Goldfarb-Idnani, vía quadprog)
seguido de un pulido sobre el conjunto activo para llevar el residuo KKT
a precisión de máquina. La verificación previa de factibilidad es un LP
(HiGHS de scipy) con u fija.
"""
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np
import quadprog
from scipy.linalg import lstsq
from scipy.optimize import linprog

from app.core.constants import AUX_REG, EPS_ACT, EPS_FEAS, EPS_KKT, QP_MAX_ITER
from app.domain.errors import (
    DimensionError,
    InfeasibleProjection,
    NumericalError,
    SolverMaxIter,
)
from app.domain.types import (
    ContainmentConstraints,
    ProjectionSolution,
    SafeActionSet,
    SolveStatus,
    as_vector,
)
from app.application.safety.zonotope import constraints_for


# ------------------------------
# Factibilidad (LP)
# ------------------------------
def feasible_aux(constraints: ContainmentConstraints, u) -> Optional[np.ndarray]:
    """
    Busca variables auxiliares que hagan factible a `u` (tolerancia EPS_FEAS).
    Devuelve el vector aux o None si no existe.
    """
    u = as_vector(u, "u")
    n_u = constraints.n_u
    if u.shape[0] != n_u:
        raise DimensionError(f"acción de dimensión {u.shape[0]}, se esperaba {n_u}")
    n_aux = constraints.n_vars - n_u
    b_eq = constraints.b_eq - constraints.A_eq[:, :n_u] @ u
    h = constraints.h - constraints.G[:, :n_u] @ u
    if n_aux == 0:
        ok = np.all(np.abs(b_eq) <= EPS_FEAS) and np.all(h >= -EPS_FEAS)
        return np.zeros(0) if ok else None
    res = linprog(
        c=np.zeros(n_aux),
        A_ub=constraints.G[:, n_u:] if constraints.n_ineq else None,
        b_ub=h if constraints.n_ineq else None,
        A_eq=constraints.A_eq[:, n_u:] if constraints.n_eq else None,
        b_eq=b_eq if constraints.n_eq else None,
        bounds=[(None, None)] * n_aux,
        method="highs",
        options={"primal_feasibility_tolerance": EPS_FEAS},
    )
    if res.status != 0:
        return None
    return np.asarray(res.x, dtype=np.float64)


def is_member(safe_set: SafeActionSet, u, x=None) -> bool:
    return feasible_aux(constraints_for(safe_set, x), u) is not None


def is_nonempty(safe_set: SafeActionSet, x=None) -> bool:
    """LP de factibilidad con u libre."""
    cons = constraints_for(safe_set, x)
    res = linprog(
        c=np.zeros(cons.n_vars),
        A_ub=cons.G if cons.n_ineq else None,
        b_ub=cons.h if cons.n_ineq else None,
        A_eq=cons.A_eq if cons.n_eq else None,
        b_eq=cons.b_eq if cons.n_eq else None,
        bounds=[(None, None)] * cons.n_vars,
        method="highs",
        options={"primal_feasibility_tolerance": EPS_FEAS},
    )
    return res.status == 0


# ------------------------------
# KKT
# ------------------------------
def kkt_residual(
    H: np.ndarray,
    f: np.ndarray,
    constraints: ContainmentConstraints,
    z: np.ndarray,
    kappa: np.ndarray,
    upsilon: np.ndarray,
) -> float:
    """Máximo de estacionariedad, factibilidad primal/dual y complementariedad."""
    stat = H @ z + f + constraints.A_eq.T @ kappa + constraints.G.T @ upsilon
    parts = [np.max(np.abs(stat)) if stat.size else 0.0]
    if constraints.n_eq:
        parts.append(np.max(np.abs(constraints.A_eq @ z - constraints.b_eq)))
    if constraints.n_ineq:
        slack = constraints.h - constraints.G @ z
        parts.append(max(0.0, float(-slack.min())))
        parts.append(max(0.0, float(-upsilon.min())))
        parts.append(float(np.max(np.abs(upsilon * slack))))
    return float(max(parts))


def _active_rows(constraints: ContainmentConstraints, z: np.ndarray) -> list:
    if not constraints.n_ineq:
        return []
    slack = constraints.h - constraints.G @ z
    return [int(i) for i in np.flatnonzero(np.abs(slack) <= EPS_ACT)]


def _polish(
    H: np.ndarray,
    f: np.ndarray,
    constraints: ContainmentConstraints,
    rows: list,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Resuelve el sistema KKT de igualdad con las filas activas dadas."""
    n, p, k = constraints.n_vars, constraints.n_eq, len(rows)
    Ga = constraints.G[rows] if k else np.zeros((0, n))
    K = np.zeros((n + p + k, n + p + k))
    K[:n, :n] = H
    K[:n, n:n + p] = constraints.A_eq.T
    K[:n, n + p:] = Ga.T
    K[n:n + p, :n] = constraints.A_eq
    K[n + p:, :n] = Ga
    rhs = np.concatenate([-f, constraints.b_eq, constraints.h[rows] if k else np.zeros(0)])
    sol = lstsq(K, rhs, lapack_driver="gelsd")[0]
    z = sol[:n]
    kappa = sol[n:n + p]
    upsilon = np.zeros(constraints.n_ineq)
    if k:
        upsilon[rows] = sol[n + p:]
    return z, kappa, upsilon


# ------------------------------
# QP genérico
# ------------------------------
def solve_qp(H, f, constraints: ContainmentConstraints) -> ProjectionSolution:
    """
    min 1/2 z'Hz + f'z  s.a.  A_eq z = b_eq, G z <= h.
    """
    H = np.asarray(H, dtype=np.float64)
    f = as_vector(f, "f")
    n = constraints.n_vars
    if H.shape != (n, n) or f.shape[0] != n:
        raise DimensionError(f"H {H.shape} / f {f.shape} incompatibles con {n} variables")
    if not (np.all(np.isfinite(constraints.A_eq)) and np.all(np.isfinite(constraints.G))):
        raise NumericalError("restricciones con entradas no finitas")

    p, m = constraints.n_eq, constraints.n_ineq
    # quadprog: min 1/2 x'Gx - a'x  s.a.  C'x >= b (las meq primeras como igualdad)
    if p + m:
        C = np.hstack([constraints.A_eq.T, -constraints.G.T])
        b = np.concatenate([constraints.b_eq, -constraints.h])
    else:
        C, b = None, None
    try:
        x, _, _, iters, lagr, _ = quadprog.solve_qp(
            np.ascontiguousarray(H), -f, C, b, meq=p
        )
    except ValueError as exc:
        msg = str(exc)
        if "inconsistent" in msg:
            return ProjectionSolution(
                u_phi=np.full(constraints.n_u, np.nan),
                z=np.full(n, np.nan),
                duals_eq=np.zeros(p),
                duals_ineq=np.zeros(m),
                active_set=[],
                kkt_residual=float("inf"),
                iterations=0,
                status=SolveStatus.INFEASIBLE,
            )
        raise NumericalError(f"QP mal planteado: {msg}") from exc

    z = np.asarray(x, dtype=np.float64)
    lagr = np.asarray(lagr, dtype=np.float64)
    kappa = -lagr[:p]
    upsilon = lagr[p:]
    n_iter = int(iters[0])

    res = kkt_residual(H, f, constraints, z, kappa, upsilon)
    if res > EPS_KKT:
        rows = [i for i in _active_rows(constraints, z) if upsilon[i] > 0.0] or _active_rows(constraints, z)
        z2, k2, u2 = _polish(H, f, constraints, rows)
        res2 = kkt_residual(H, f, constraints, z2, k2, u2)
        if res2 < res:
            z, kappa, upsilon, res = z2, k2, u2, res2

    status = SolveStatus.SOLVED
    if n_iter > QP_MAX_ITER:
        status = SolveStatus.MAX_ITER
    return ProjectionSolution(
        u_phi=z[: constraints.n_u].copy(),
        z=z,
        duals_eq=kappa,
        duals_ineq=upsilon,
        active_set=_active_rows(constraints, z),
        kkt_residual=res,
        iterations=n_iter,
        status=status,
    )


def projection_objective(constraints: ContainmentConstraints, u) -> Tuple[np.ndarray, np.ndarray]:
    """H = diag(1 en u_tilde, AUX_REG en auxiliares) y f = [-u, 0]."""
    u = as_vector(u, "u")
    n, n_u = constraints.n_vars, constraints.n_u
    diag = np.full(n, AUX_REG)
    diag[:n_u] = 1.0
    f = np.zeros(n)
    f[:n_u] = -u
    return np.diag(diag), f


# ------------------------------
# Proyección
# ------------------------------
def project_constraints(constraints: ContainmentConstraints, u) -> ProjectionSolution:
    u = as_vector(u, "u")
    if u.shape[0] != constraints.n_u:
        raise DimensionError(f"acción de dimensión {u.shape[0]}, se esperaba {constraints.n_u}")
    if not np.all(np.isfinite(u)):
        raise NumericalError("acción no finita")

    aux = feasible_aux(constraints, u)
    if aux is not None:
        # u ya es segura: se devuelve tal cual
        return ProjectionSolution(
            u_phi=u.copy(),
            z=np.concatenate([u, aux]),
            duals_eq=np.zeros(constraints.n_eq),
            duals_ineq=np.zeros(constraints.n_ineq),
            active_set=[],
            kkt_residual=0.0,
            iterations=0,
            status=SolveStatus.SOLVED,
            short_circuit=True,
        )
    H, f = projection_objective(constraints, u)
    return solve_qp(H, f, constraints)


def project(safe_set: SafeActionSet, x, u) -> ProjectionSolution:
    if u is not None and as_vector(u, "u").shape[0] != safe_set.action_dim:
        raise DimensionError("dimensión de acción incompatible con el conjunto seguro")
    return project_constraints(constraints_for(safe_set, x), u)


def project_or_raise(safe_set: SafeActionSet, x, u) -> ProjectionSolution:
    """Versión para entrenamiento: los estados no resueltos son errores."""
    sol = project(safe_set, x, u)
    if sol.status == SolveStatus.INFEASIBLE:
        raise InfeasibleProjection("conjunto de acciones seguras vacío en este estado")
    if sol.status == SolveStatus.MAX_ITER:
        raise SolverMaxIter(f"QP sin converger tras {sol.iterations} iteraciones")
    if sol.kkt_residual > EPS_KKT:
        raise NumericalError(f"residuo KKT {sol.kkt_residual:.3e} por encima de la tolerancia")
    return sol


__all__ = [
    "feasible_aux",
    "is_member",
    "is_nonempty",
    "kkt_residual",
    "project",
    "project_constraints",
    "project_or_raise",
    "projection_objective",
    "solve_qp",
]

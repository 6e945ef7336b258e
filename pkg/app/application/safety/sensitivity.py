# app/application/safety/sensitivity.py
"""
Jacobiano del safeguard respecto a la acción propuesta, por el teorema de
la función implícita sobre el sistema KKT reducido al conjunto activo:

    [ H    A'   Ga' ] [dz]   [ E ]
    [ A    0    0   ] [dk] = [ 0 ]  du,     E = [I_m; 0]
    [ Ga   0    0   ] [dv]   [ 0 ]

Solo se expone el bloque de u_tilde.
"""
from __future__ import annotations

from typing import Tuple

import numpy as np
from scipy.linalg import LinAlgError, lstsq, solve

from app.core.constants import EPS_ACT, KKT_COND_LIMIT
from app.domain.errors import SingularKkt
from app.domain.types import (
    ContainmentConstraints,
    ProjectionSolution,
    SafeActionSet,
    SafeguardJacobian,
    SolveStatus,
)
from app.application.safety.projection import project_or_raise, projection_objective
from app.application.safety.zonotope import constraints_for


def _identity(m: int) -> SafeguardJacobian:
    return SafeguardJacobian(J=np.eye(m), active_rank=m, normal_basis=np.zeros((m, 0)))


def _spectral_split(J: np.ndarray) -> Tuple[int, np.ndarray]:
    """Rango y base del espacio normal (autovalores ~0 de J simétrica)."""
    vals, vecs = np.linalg.eigh(J)
    normal = vecs[:, vals < 0.5]
    return int(J.shape[0] - normal.shape[1]), normal


def safeguard_jacobian(sol: ProjectionSolution, constraints: ContainmentConstraints) -> SafeguardJacobian:
    if sol.status != SolveStatus.SOLVED:
        raise SingularKkt(f"no hay Jacobiano para una solución con status {sol.status.value}")
    m = constraints.n_u
    if sol.short_circuit:
        return _identity(m)

    # filas débilmente activas (dual < EPS_ACT) se tratan como inactivas
    strong = [i for i in sol.active_set if sol.duals_ineq[i] >= EPS_ACT]
    dropped = len(sol.active_set) - len(strong)
    if not strong:
        jac = _identity(m)
        return SafeguardJacobian(jac.J, jac.active_rank, jac.normal_basis, degenerate=dropped > 0)

    H, _ = projection_objective(constraints, sol.u_phi)
    n, p, k = constraints.n_vars, constraints.n_eq, len(strong)
    Ga = constraints.G[strong]
    K = np.zeros((n + p + k, n + p + k))
    K[:n, :n] = H
    K[:n, n:n + p] = constraints.A_eq.T
    K[:n, n + p:] = Ga.T
    K[n:n + p, :n] = constraints.A_eq
    K[n + p:, :n] = Ga
    rhs = np.zeros((n + p + k, m))
    rhs[:m, :m] = np.eye(m)

    degenerate = dropped > 0
    cond = np.linalg.cond(K)
    if np.isfinite(cond) and cond <= KKT_COND_LIMIT:
        try:
            # LDL' con pivoteo simétrico (Bunch-Kaufman)
            dz = solve(K, rhs, assume_a="sym")
        except LinAlgError:
            dz = lstsq(K, rhs, lapack_driver="gelsd")[0]
            degenerate = True
    else:
        # filas activas dependientes: la solución en z sigue siendo única
        dz = lstsq(K, rhs, lapack_driver="gelsd")[0]
        degenerate = True

    J = dz[:m, :m]
    if not np.all(np.isfinite(J)):
        raise SingularKkt("Jacobiano no finito")
    # K es simétrica, luego también el bloque u de su inversa
    J = 0.5 * (J + J.T)
    rank, normal = _spectral_split(J)
    return SafeguardJacobian(J=J, active_rank=rank, normal_basis=normal, degenerate=degenerate)


def project_and_jacobian(
    safe_set: SafeActionSet, x, u
) -> Tuple[ProjectionSolution, SafeguardJacobian]:
    cons = constraints_for(safe_set, x)
    sol = project_or_raise(safe_set, x, u)
    return sol, safeguard_jacobian(sol, cons)

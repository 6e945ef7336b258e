# app/api/project.py
from __future__ import annotations

import numpy as np
from fastapi import APIRouter, HTTPException

from app.domain.errors import DimensionError, SafeRLError
from app.domain.models import ProjectRequest, ProjectResponse
from app.domain.types import SafeActionSet, Zonotope
from app.application.safety.projection import project
from app.application.safety.sensitivity import safeguard_jacobian
from app.application.safety.zonotope import constraints_for

router = APIRouter()


@router.post("/project", response_model=ProjectResponse)
def project_action(req: ProjectRequest):
    """
    Depuración: proyecta `u` sobre el zonotopo de acciones <center, generators>
    (un generador por fila) y devuelve el Jacobiano si el QP se resolvió.
    """
    try:
        c = np.asarray(req.center, dtype=np.float64)
        G = np.asarray(req.generators, dtype=np.float64).reshape(-1, c.shape[0]).T
        ss = SafeActionSet.direct(Zonotope(c, G))
        sol = project(ss, None, req.u)
    except (DimensionError, ValueError) as e:
        raise HTTPException(status_code=422, detail=str(e))
    except SafeRLError as e:
        raise HTTPException(status_code=500, detail=f"{type(e).__name__}: {e}")

    jac = None
    if sol.solved:
        jac = safeguard_jacobian(sol, constraints_for(ss)).J.tolist()
    return ProjectResponse(
        u_phi=sol.u_phi.tolist(),
        status=sol.status.value,
        active_set=list(sol.active_set),
        kkt_residual=float(sol.kkt_residual),
        jacobian=jac,
    )

# app/application/safety/zonotope.py
"""
Geometría de zonotopos y restricciones lineales de contención.

Vector de decisión común a todos los modos: z = [u_tilde, aux].
  - Pertenencia directa:  B_u nu = u_tilde - c_u,  |nu|_inf <= 1.
  - Contención <c1,B1> en <c2,B2>: B1 = B2 Gamma, c2 - c1 = B2 omega y
    || [Gamma omega] ||_inf <= 1 (norma inducida: suma por filas), que se
    linealiza con variables epígrafo t >= |.|.
"""
from __future__ import annotations

from itertools import combinations
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from app.domain.errors import DimensionError
from app.domain.types import (
    AffineDynamics,
    ContainmentConstraints,
    SafeActionSet,
    SafeSetMode,
    Zonotope,
    as_vector,
)


# ------------------------------
# Operaciones básicas
# ------------------------------
def linear_map(z: Zonotope, M: np.ndarray) -> Zonotope:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[1] != z.dim:
        raise DimensionError(f"mapa {M.shape} incompatible con zonotopo de dimensión {z.dim}")
    return Zonotope(M @ z.center, M @ z.generators)


def translate(z: Zonotope, p) -> Zonotope:
    """Suma de Minkowski con un punto."""
    p = as_vector(p, "p")
    if p.shape[0] != z.dim:
        raise DimensionError("traslación con dimensión distinta")
    return Zonotope(z.center + p, z.generators)


def interval_hull(z: Zonotope) -> Tuple[np.ndarray, np.ndarray]:
    r = np.abs(z.generators).sum(axis=1)
    return z.center - r, z.center + r


def contains_point(z: Zonotope, p, tol: float = 1e-9) -> bool:
    """p en <c, B> si existe beta con B beta = p - c y |beta|_inf <= 1 (LP)."""
    p = as_vector(p, "p")
    if p.shape[0] != z.dim:
        raise DimensionError("punto con dimensión distinta")
    d = p - z.center
    if z.n_generators == 0:
        return bool(np.all(np.abs(d) <= tol))
    res = linprog(
        c=np.zeros(z.n_generators),
        A_eq=z.generators,
        b_eq=d,
        bounds=[(-1.0 - tol, 1.0 + tol)] * z.n_generators,
        method="highs",
    )
    return res.status == 0


def halfspace_representation(z: Zonotope) -> Tuple[np.ndarray, np.ndarray]:
    """
    {y : H y <= d} para un zonotopo de dimensión completa. Cada faceta es
    normal a n-1 generadores; se descartan combinaciones degeneradas y
    filas repetidas.
    """
    n, G = z.dim, z.generators
    if np.linalg.matrix_rank(G) < n:
        raise DimensionError("halfspace_representation requiere un zonotopo de dimensión completa")
    normals = [np.ones(1)] if n == 1 else []
    for combo in combinations(range(G.shape[1]), n - 1) if n > 1 else ():
        sub = G[:, list(combo)]
        if np.linalg.matrix_rank(sub) < n - 1:
            continue
        # vector nulo de sub' (producto cruz generalizado)
        nv = np.linalg.svd(sub.T)[2][-1]
        normals.append(nv / np.linalg.norm(nv))
    H_rows, d_rows = [], []
    for nv in normals:
        off = float(np.sum(np.abs(nv @ G)))
        for sgn in (1.0, -1.0):
            row = sgn * nv
            if any(np.allclose(row, r, atol=1e-12) for r in H_rows):
                continue
            H_rows.append(row)
            d_rows.append(float(row @ z.center) + off)
    return np.array(H_rows), np.array(d_rows)


def vertices_2d(z: Zonotope) -> np.ndarray:
    """
    Vértices (en sentido antihorario) de un zonotopo plano.
    Se ordenan los generadores por ángulo y se recorre el contorno.
    """
    if z.dim != 2:
        raise DimensionError("vertices_2d solo aplica a zonotopos de dimensión 2")
    G = z.generators[:, np.linalg.norm(z.generators, axis=0) > 0]
    if G.shape[1] == 0:
        return z.center.reshape(1, 2).copy()
    # semiplano superior para que el ángulo sea único
    flip = (G[1] < 0) | ((G[1] == 0) & (G[0] < 0))
    G = np.where(flip, -G, G)
    order = np.argsort(np.arctan2(G[1], G[0]), kind="stable")
    G = G[:, order]
    start = z.center - G.sum(axis=1)
    verts = [start]
    for k in range(G.shape[1]):
        verts.append(verts[-1] + 2.0 * G[:, k])
    for k in range(G.shape[1] - 1):
        verts.append(verts[-1] - 2.0 * G[:, k])
    return np.array(verts)


def reachable_set(x, u, dyn: AffineDynamics, W: Zonotope) -> Zonotope:
    """<A x + B u + c + E c_W, E G_W>: conjunto alcanzable en un paso."""
    x = as_vector(x, "x")
    u = as_vector(u, "u")
    if x.shape[0] != dyn.state_dim or u.shape[0] != dyn.action_dim:
        raise DimensionError("x/u incompatibles con la dinámica")
    if W.dim != dyn.E.shape[1]:
        raise DimensionError("perturbación incompatible con el canal E")
    center = dyn.A @ x + dyn.B @ u + dyn.c + dyn.E @ W.center
    return Zonotope(center, dyn.E @ W.generators)


# ------------------------------
# Constructores de restricciones
# ------------------------------
def _containment_rows(
    inner_generators: np.ndarray,
    outer: Zonotope,
    n_u: int,
    u_coef: Optional[np.ndarray],
    rhs_center: np.ndarray,
) -> ContainmentConstraints:
    """
    Ensambla B2 Gamma = G1 y B2 omega + u_coef u_tilde = rhs_center
    con la cota por filas sum_j |Gamma_ij| + |omega_i| <= 1.
    """
    n = outer.dim
    B2 = outer.generators
    eta2 = B2.shape[1]
    eta1 = inner_generators.shape[1]

    # bloques de variables
    sl: Dict[str, slice] = {"u": slice(0, n_u)}
    off = n_u
    sl["gamma"] = slice(off, off + eta2 * eta1); off += eta2 * eta1
    sl["omega"] = slice(off, off + eta2); off += eta2
    use_epi = eta1 > 0
    if use_epi:
        sl["t_gamma"] = slice(off, off + eta2 * eta1); off += eta2 * eta1
        sl["t_omega"] = slice(off, off + eta2); off += eta2
    n_vars = off

    # igualdades: columnas de Gamma (orden por columna) y luego omega
    A_rows: List[np.ndarray] = []
    b_rows: List[float] = []
    for j in range(eta1):
        block = np.zeros((n, n_vars))
        start = sl["gamma"].start + j * eta2
        block[:, start:start + eta2] = B2
        A_rows.append(block)
        b_rows.extend(inner_generators[:, j].tolist())
    block = np.zeros((n, n_vars))
    block[:, sl["omega"]] = B2
    if n_u:
        block[:, sl["u"]] = u_coef
    A_rows.append(block)
    b_rows.extend(np.asarray(rhs_center, dtype=np.float64).tolist())
    A_eq = np.vstack(A_rows)
    b_eq = np.asarray(b_rows, dtype=np.float64)

    # desigualdades
    G_rows: List[np.ndarray] = []
    h_rows: List[float] = []

    def row() -> np.ndarray:
        return np.zeros(n_vars)

    if use_epi:
        for i in range(eta2):
            for j in range(eta1):
                gi = sl["gamma"].start + j * eta2 + i
                ti = sl["t_gamma"].start + j * eta2 + i
                r1 = row(); r1[gi] = 1.0; r1[ti] = -1.0
                r2 = row(); r2[gi] = -1.0; r2[ti] = -1.0
                G_rows += [r1, r2]; h_rows += [0.0, 0.0]
            oi = sl["omega"].start + i
            ti = sl["t_omega"].start + i
            r1 = row(); r1[oi] = 1.0; r1[ti] = -1.0
            r2 = row(); r2[oi] = -1.0; r2[ti] = -1.0
            G_rows += [r1, r2]; h_rows += [0.0, 0.0]
            budget = row()
            for j in range(eta1):
                budget[sl["t_gamma"].start + j * eta2 + i] = 1.0
            budget[ti] = 1.0
            G_rows.append(budget); h_rows.append(1.0)
    else:
        # interior puntual: |omega_i| <= 1
        for i in range(eta2):
            oi = sl["omega"].start + i
            r1 = row(); r1[oi] = 1.0
            r2 = row(); r2[oi] = -1.0
            G_rows += [r1, r2]; h_rows += [1.0, 1.0]

    G = np.vstack(G_rows) if G_rows else np.zeros((0, n_vars))
    return ContainmentConstraints(A_eq, b_eq, G, np.asarray(h_rows, dtype=np.float64), n_u, sl)


def containment_constraints(inner: Zonotope, outer: Zonotope) -> ContainmentConstraints:
    """Restricciones (Gamma, omega) que certifican inner contenido en outer."""
    if inner.dim != outer.dim:
        raise DimensionError(f"dimensiones distintas: {inner.dim} vs {outer.dim}")
    return _containment_rows(inner.generators, outer, 0, None, outer.center - inner.center)


def direct_membership_constraints(u_set: Zonotope) -> ContainmentConstraints:
    m = u_set.dim
    eta = u_set.n_generators
    n_vars = m + eta
    A_eq = np.zeros((m, n_vars))
    A_eq[:, :m] = -np.eye(m)
    A_eq[:, m:] = u_set.generators
    b_eq = -u_set.center
    G = np.zeros((2 * eta, n_vars))
    for i in range(eta):
        G[2 * i, m + i] = 1.0
        G[2 * i + 1, m + i] = -1.0
    h = np.ones(2 * eta)
    return ContainmentConstraints(A_eq, b_eq, G, h, m, {"u": slice(0, m), "nu": slice(m, n_vars)})


def _append_action_bounds(
    cons: ContainmentConstraints, low: Optional[np.ndarray], high: Optional[np.ndarray]
) -> ContainmentConstraints:
    if low is None and high is None:
        return cons
    rows, rhs = [], []
    for k in range(cons.n_u):
        if high is not None:
            r = np.zeros(cons.n_vars); r[k] = 1.0
            rows.append(r); rhs.append(float(high[k]))
        if low is not None:
            r = np.zeros(cons.n_vars); r[k] = -1.0
            rows.append(r); rhs.append(-float(low[k]))
    G = np.vstack([cons.G] + rows)
    h = np.concatenate([cons.h, np.asarray(rhs)])
    return ContainmentConstraints(cons.A_eq, cons.b_eq, G, h, cons.n_u, cons.labels)


def reach_contain_constraints(
    x,
    dyn: AffineDynamics,
    W: Zonotope,
    x_safe: Zonotope,
    u_low=None,
    u_high=None,
) -> ContainmentConstraints:
    """Reach(x, u_tilde, W) contenido en x_safe, más cotas de actuador."""
    x = as_vector(x, "x")
    if x.shape[0] != dyn.state_dim or x_safe.dim != dyn.state_dim:
        raise DimensionError("estado o conjunto seguro incompatibles con la dinámica")
    if W.dim != dyn.E.shape[1]:
        raise DimensionError("perturbación incompatible con el canal E")
    inner_generators = dyn.E @ W.generators
    rhs = x_safe.center - (dyn.A @ x + dyn.c + dyn.E @ W.center)
    cons = _containment_rows(inner_generators, x_safe, dyn.action_dim, dyn.B, rhs)
    return _append_action_bounds(cons, u_low, u_high)


def constraints_for(safe_set: SafeActionSet, x=None) -> ContainmentConstraints:
    if safe_set.mode == SafeSetMode.DIRECT:
        return direct_membership_constraints(safe_set.u_set)
    x_eval = safe_set.x if x is None else as_vector(x, "x")
    return reach_contain_constraints(
        x_eval,
        safe_set.dynamics,
        safe_set.disturbance,
        safe_set.x_safe,
        safe_set.u_low,
        safe_set.u_high,
    )

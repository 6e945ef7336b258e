# app/core/constants.py
"""
Tolerancias numéricas del safeguard y del núcleo neuronal.
Único lugar donde se definen; el resto del código las importa de aquí.
"""
from __future__ import annotations

# Factibilidad de u_phi respecto a las restricciones
EPS_FEAS: float = 1e-7
# Holgura / dual por debajo de la cual una fila cuenta como activa
EPS_ACT: float = 1e-6
# Residuo KKT máximo para status Solved
EPS_KKT: float = 1e-8

# Regularización diagonal de las variables auxiliares (Gamma, omega, nu)
AUX_REG: float = 1e-10

# Condición máxima del sistema KKT reducido
KKT_COND_LIMIT: float = 1e12

# Iteraciones máximas del método de conjunto activo dual
QP_MAX_ITER: int = 500

# Adam
ADAM_BETA1: float = 0.9
ADAM_BETA2: float = 0.999
ADAM_EPS: float = 1e-8

# Presupuesto de muestreo por rechazo (reset del seeker)
RESET_MAX_TRIES: int = 10_000

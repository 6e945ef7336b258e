# app/domain/errors.py
from __future__ import annotations


class SafeRLError(Exception):
    """Base de todos los errores del paquete."""


class DimensionError(SafeRLError, ValueError):
    """Dimensiones incompatibles entre vectores/matrices/zonotopos."""


class InfeasibleProjection(SafeRLError):
    """El conjunto de acciones seguras está vacío para el estado dado."""


class SolverMaxIter(SafeRLError):
    """El QP agotó su presupuesto de iteraciones."""


class SingularKkt(SafeRLError):
    """Sistema KKT reducido singular o mal condicionado."""


class EmptySafeSet(InfeasibleProjection):
    """No existe acción segura: el episodio termina con outcome 'infeasible'."""


class NumericalError(SafeRLError):
    """Gradiente o pérdida no finitos durante el entrenamiento."""


class ConfigError(SafeRLError):
    """Configuración inválida (código de salida 2 en la CLI)."""


class SamplingBudgetExceeded(SafeRLError):
    """El muestreo por rechazo no encontró un estado inicial válido."""

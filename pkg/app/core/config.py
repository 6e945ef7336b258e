# app/core/config.py
from __future__ import annotations

from pathlib import Path
import os

# ------------------------------
# Helpers
# ------------------------------
def _as_bool(val: str | int | None, default: bool = False) -> bool:
    """Convierte valores de env a bool de forma robusta."""
    if val is None:
        return default
    s = str(val).strip().lower()
    return s in {"1", "true", "t", "yes", "y", "on"}


# ------------------------------
# Rutas base
# ------------------------------
# Raíz del repo (contiene /app, /runs, /data, /tests)
BASE_DIR: Path = Path(__file__).resolve().parents[2]
APP_DIR: Path = BASE_DIR / "app"

APP_NAME = "SafeProjRL"
APP_VERSION = "0.3.0"

# ------------------------------
# Datos y ejecuciones (overridable por ENV)
# ------------------------------
DATA_DIR: Path = Path(os.getenv("DATA_DIR", str(BASE_DIR / "data")))

# Conjuntos seguros (zonotopos) y constantes de entornos
SETS_DIR: Path = DATA_DIR / "sets"
ENVS_DIR: Path = DATA_DIR / "envs"


def runs_dir() -> Path:
    """
    Raíz de salida de las ejecuciones. Se lee en cada llamada para que
    los tests puedan redirigirla con monkeypatch.setenv("RUNS_DIR", ...).
    """
    p = Path(os.getenv("RUNS_DIR", str(BASE_DIR / "runs")))
    p.mkdir(parents=True, exist_ok=True)
    return p


# ------------------------------
# Protocolo de evaluación
# ------------------------------
# FULL_PROTOCOL=1 => 7 semillas de entrenamiento x 10 de evaluación
FULL_PROTOCOL: bool = _as_bool(os.getenv("FULL_PROTOCOL", "0"), default=False)
DESK_TRAIN_SEEDS = (0, 1, 2)
DESK_EVAL_SEEDS = (100, 101, 102, 103, 104)
FULL_TRAIN_SEEDS = tuple(range(7))
FULL_EVAL_SEEDS = tuple(range(100, 110))

# Pasos de entorno por defecto a escala de escritorio
DESK_STEPS = {"pendulum": 50_000, "quadrotor": 100_000, "seeker": 100_000}

# Workers de joblib para semillas en paralelo (1 = secuencial)
N_JOBS: int = int(os.getenv("N_JOBS", "1"))

# Bootstrap
N_BOOT: int = int(os.getenv("N_BOOT", "2000"))
CI_LEVEL: float = float(os.getenv("CI_LEVEL", "0.95"))

# ------------------------------
# API
# ------------------------------
# En dev dejamos /runs como estático; en producción ponerlo a 0.
EXPOSE_RUNS_STATIC: bool = _as_bool(os.getenv("EXPOSE_RUNS_STATIC", "0"), default=False)

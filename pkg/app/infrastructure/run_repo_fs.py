# app/infrastructure/run_repo_fs.py
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Optional

from app.infrastructure.files import read_json, run_path, write_json


def status_path(run_id: str, base: Optional[Path] = None) -> Path:
    """Ruta al status.json de una ejecución."""
    return run_path(run_id, base) / "status.json"


def read_status(run_id: str, base: Optional[Path] = None) -> Dict[str, Any]:
    """
    Lee el estado de la ejecución desde disco.
    Devuelve {} si no existe (robusto para llamadas tempranas).
    """
    return read_json(status_path(run_id, base)) or {}


def write_status(run_id: str, data: Dict[str, Any], base: Optional[Path] = None) -> None:
    """
    Persiste el estado usando escritura atómica (.tmp + replace).
    """
    write_json(status_path(run_id, base), data)

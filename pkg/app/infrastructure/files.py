# app/infrastructure/files.py
from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Optional

import pandas as pd

from app.core.config import runs_dir

_RUN_ID_RE = re.compile(r"^[A-Za-z0-9._-]+$")


def validate_run_id(run_id: str) -> str:
    """Evita rutas fuera de runs/ (ids con '/' o '..')."""
    if not run_id or not _RUN_ID_RE.match(run_id) or run_id in {".", ".."}:
        raise ValueError(f"id de ejecución inválido: {run_id!r}")
    return run_id


def run_path(run_id: str, base: Optional[Path] = None) -> Path:
    return (base or runs_dir()) / validate_run_id(run_id)


def create_run_dir(run_id: str, base: Optional[Path] = None) -> Path:
    d = run_path(run_id, base)
    (d / "checkpoints").mkdir(parents=True, exist_ok=True)
    return d


def write_json(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
    tmp.replace(path)


def read_json(path: Path) -> dict:
    if not path.exists():
        return {}
    with path.open("r", encoding="utf-8") as f:
        return json.load(f)


def write_csv(path: Path, df: pd.DataFrame) -> None:
    """CSV con formato de floats fijo para que dos ejecuciones iguales den los mismos bytes."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    df.to_csv(tmp, index=False, float_format="%.17g", lineterminator="\n")
    tmp.replace(path)


def write_bytes(path: Path, payload: bytes) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(payload)
    tmp.replace(path)
    return path

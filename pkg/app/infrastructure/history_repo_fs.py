# app/infrastructure/history_repo_fs.py
from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from app.infrastructure.files import run_path

HISTORY_FILENAME = "history.jsonl"


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


def _jsonable(v: Any) -> Any:
    # los eventos de entrenamiento traen escalares y vectores numpy
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(f"{type(v).__name__} no serializable en la bitácora")


def history_path(run_id: str, base: Optional[Path] = None) -> Path:
    return run_path(run_id, base) / HISTORY_FILENAME


def append_history(run_id: str, event: Dict[str, Any], base: Optional[Path] = None) -> None:
    """Agrega un evento (con `type` y `ts`) como una línea de runs/{id}/history.jsonl."""
    p = history_path(run_id, base)
    p.parent.mkdir(parents=True, exist_ok=True)
    payload = {"ts": _now_iso(), **event}
    with p.open("a", encoding="utf-8") as f:
        f.write(json.dumps(payload, ensure_ascii=False, default=_jsonable) + "\n")


def iter_history(run_id: str, base: Optional[Path] = None) -> Iterable[Dict[str, Any]]:
    p = history_path(run_id, base)
    if not p.exists():
        return
    with p.open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError:
                # línea truncada por un proceso abortado
                continue


def read_history(
    run_id: str,
    limit: Optional[int] = None,
    base: Optional[Path] = None,
    types: Optional[Iterable[str]] = None,
) -> List[Dict[str, Any]]:
    """
    Eventos de la bitácora en orden de escritura. `types` filtra por campo
    `type` antes de aplicar `limit` (últimos N).
    """
    wanted = set(types) if types else None
    items = [e for e in iter_history(run_id, base) if wanted is None or e.get("type") in wanted]
    if limit and limit > 0:
        return items[-limit:]
    return items

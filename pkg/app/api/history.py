# app/api/history.py
from __future__ import annotations

from typing import Optional

from fastapi import APIRouter, HTTPException
from fastapi.responses import FileResponse, JSONResponse

from app.infrastructure.files import validate_run_id
from app.infrastructure.history_repo_fs import history_path, read_history

router = APIRouter()


def _checked(run_id: str) -> str:
    try:
        return validate_run_id(run_id)
    except ValueError:
        raise HTTPException(status_code=400, detail="Identificador de ejecución inválido")


@router.get("/runs/{run_id}/history")
def get_history(run_id: str, download: int = 0, limit: Optional[int] = None, type: Optional[str] = None):
    """
    JSON { "items": [...] } con los eventos de history.jsonl (filtrables por
    `type`). Con download=1 devuelve el fichero NDJSON tal cual.
    """
    _checked(run_id)
    if download:
        path = history_path(run_id)
        if not path.exists():
            # sin bitácora: JSON vacío, no 404
            return JSONResponse({"items": []})
        return FileResponse(path, media_type="application/x-ndjson", filename=f"history_{run_id}.jsonl")

    rows = read_history(run_id, limit=limit, types=[type] if type else None)
    return JSONResponse({"items": rows})

# app/main.py
from __future__ import annotations

from datetime import datetime, timezone

from fastapi import FastAPI
from fastapi.staticfiles import StaticFiles

from app.core.config import APP_NAME, APP_VERSION, EXPOSE_RUNS_STATIC, runs_dir
from app.api.history import router as history_router   # /api/runs/{id}/history
from app.api.project import router as project_router   # /api/project
from app.api.status import router as status_router     # /api/runs/{id}/status

app = FastAPI(title=APP_NAME, version=APP_VERSION)


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


# ---------- Meta ----------
@app.get("/", tags=["meta"])
def root():
    return {"name": f"{APP_NAME} API", "version": APP_VERSION, "status": "ok", "time": _now_iso()}


@app.get("/health", tags=["meta"])
def health():
    return {"ok": True, "time": _now_iso()}


# ---------- Estáticos (solo desarrollo) ----------
if EXPOSE_RUNS_STATIC:
    app.mount("/runs", StaticFiles(directory=str(runs_dir())), name="runs")

# ---------- Routers ----------
app.include_router(status_router, prefix="/api")
app.include_router(history_router, prefix="/api")
app.include_router(project_router, prefix="/api")

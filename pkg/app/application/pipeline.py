# app/application/pipeline.py
from __future__ import annotations

import hashlib
import json
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
import scipy
import yaml
from joblib import Parallel, delayed
from pydantic import ValidationError

from app.core.config import APP_VERSION, N_JOBS
from app.domain.errors import ConfigError
from app.domain.models import ExperimentConfig, RunSummary, SeedResult
from app.infrastructure.checkpoint_fs import load_checkpoint, save_checkpoint
from app.infrastructure.files import create_run_dir, write_csv, write_json
from app.infrastructure.history_repo_fs import append_history
from app.infrastructure.run_repo_fs import write_status
from app.application.envs.registry import make_env
from app.application.stats import iqm_ci
from app.application.training import evaluate, policy_from_blocks, run_seed

# Etapas mostradas en status.json
STAGES = ["Configuración", "Entrenamiento", "Métricas", "Resumen"]

METRIC_COLUMNS = [
    "train_seed",
    "env_step",
    "eval_return_mean",
    "interventions",
    "penalty_sum",
    "violations",
    "actor_loss",
    "critic_loss",
]


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


# ------------------------------
# Configuración
# ------------------------------
def load_config(path: Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"No existe el fichero de configuración: {path}")
    with path.open("r", encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path.name}: se esperaba un mapeo YAML")
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{path.name}: {exc}") from exc


def config_hash(cfg: ExperimentConfig) -> str:
    """Hash estable de todo lo que afecta a los resultados (no incluye output_dir)."""
    payload = cfg.model_dump(mode="json", exclude={"output_dir"})
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def make_run_id(cfg: ExperimentConfig) -> str:
    return f"{cfg.label()}-{config_hash(cfg)[:10]}"


def _base(cfg: ExperimentConfig) -> Optional[Path]:
    return Path(cfg.output_dir) if cfg.output_dir else None


# ------------------------------
# Estado y bitácora
# ------------------------------
def _write(run_id: str, status: Dict[str, Any], base: Optional[Path]) -> None:
    """Normaliza y guarda status.json (progress 0..100 + updated_at)."""
    status["updated_at"] = now_iso()
    status["progress"] = max(0, min(100, int(status.get("progress", 0))))
    write_status(run_id, status, base)


def _stage(run_id: str, stage: str, base: Optional[Path] = None):
    """
    Context manager simple para registrar start/end + duración de una etapa.
    Uso:
        with _stage(run_id, "Entrenamiento"):
            ... trabajo ...
    """

    class _Ctx:
        def __enter__(self_inner):
            self_inner.t0 = time.time()
            append_history(run_id, {"type": "stage_start", "stage": stage}, base)
            return self_inner

        def __exit__(self_inner, exc_type, exc, tb):
            dur_ms = int((time.time() - self_inner.t0) * 1000)
            event = {"type": "stage_end", "stage": stage, "duration_ms": dur_ms}
            if exc:
                event.update(status="failed", error=str(exc))
            else:
                event["status"] = "ok"
            append_history(run_id, event, base)
            return False

    return _Ctx()


def _mark(status: Dict[str, Any], stage: str, state: str) -> None:
    for s in status["steps"]:
        if s["name"] == stage:
            s["status"] = state


# ------------------------------
# Ejecución
# ------------------------------
def run_experiment(cfg: ExperimentConfig) -> RunSummary:
    """
    Entrena cada semilla, evalúa de forma determinista y escribe en
    runs/<run_id>/: config.yaml, metrics.csv, summary.json, manifest.json,
    checkpoints/seed_<k>.bin, status.json e history.jsonl.
    """
    base = _base(cfg)
    run_id = make_run_id(cfg)
    run_dir = create_run_dir(run_id, base)
    h = config_hash(cfg)

    status: Dict[str, Any] = {
        "id": run_id,
        "label": cfg.label(),
        "status": "queued",
        "progress": 0,
        "current_step": STAGES[0],
        "steps": [{"name": s, "status": "pending"} for s in STAGES],
        "metrics": {},
        "artifacts": {},
    }
    _write(run_id, status, base)
    append_history(run_id, {"type": "run_started", "label": cfg.label(), "config_hash": h}, base)

    rows: List[dict] = []
    try:
        status["status"] = "running"
        _write(run_id, status, base)

        with _stage(run_id, "Configuración", base):
            payload = yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=True, allow_unicode=True)
            (run_dir / "config.yaml").write_text(payload, encoding="utf-8")
            make_env(cfg.env)
            _mark(status, "Configuración", "ok")
            status.update(progress=5, current_step="Entrenamiento")
            _write(run_id, status, base)

        with _stage(run_id, "Entrenamiento", base):
            outcomes = Parallel(n_jobs=N_JOBS)(delayed(run_seed)(cfg, s) for s in cfg.train_seeds)
            ckpts = {}
            for oc in outcomes:
                for ev in oc.events:
                    append_history(run_id, ev, base)
                path = save_checkpoint(run_dir / "checkpoints" / f"seed_{oc.train_seed}.bin", oc.blocks)
                ckpts[str(oc.train_seed)] = path.relative_to(run_dir).as_posix()
                rows.extend(oc.rows)
            _mark(status, "Entrenamiento", "ok")
            status.update(progress=85, current_step="Métricas")
            status["artifacts"]["checkpoints"] = ckpts
            _write(run_id, status, base)

        with _stage(run_id, "Métricas", base):
            df = pd.DataFrame(rows, columns=METRIC_COLUMNS).sort_values(["train_seed", "env_step"], kind="stable")
            write_csv(run_dir / "metrics.csv", df)
            _mark(status, "Métricas", "ok")
            status.update(progress=90, current_step="Resumen")
            status["artifacts"]["metrics"] = "metrics.csv"
            _write(run_id, status, base)

        with _stage(run_id, "Resumen", base):
            seeds = [
                SeedResult(
                    train_seed=oc.train_seed,
                    returns=oc.final.returns,
                    interventions=oc.final.interventions,
                    violations=oc.final.violations,
                    infeasible_episodes=oc.final.infeasible,
                )
                for oc in outcomes
            ]
            all_returns = [r for sr in seeds for r in sr.returns]
            # RNG del bootstrap derivado del hash de configuración
            rng = np.random.default_rng(int(h[:16], 16))
            point, lo, hi = iqm_ci(all_returns, rng=rng)
            manifest = {
                "run_id": run_id,
                "config_hash": h,
                "code_version": APP_VERSION,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            }
            summary = RunSummary(
                run_id=run_id,
                label=cfg.label(),
                env=cfg.env,
                algorithm=cfg.algorithm,
                wiring=cfg.wiring.value,
                mitigation=cfg.mitigation.value,
                w=cfg.w,
                seeds=seeds,
                iqm=point,
                ci_low=lo,
                ci_high=hi,
                interventions_mean=float(np.mean([i for sr in seeds for i in sr.interventions])),
                violations=int(sum(sr.violations for sr in seeds)),
                manifest=manifest,
            )
            write_json(run_dir / "summary.json", summary.model_dump(mode="json"))
            write_json(run_dir / "manifest.json", manifest)
            _mark(status, "Resumen", "ok")
            status["artifacts"].update(summary="summary.json", manifest="manifest.json")
            status["metrics"] = {"iqm": point, "ci_low": lo, "ci_high": hi, "violations": summary.violations}

        status.update(status="completed", progress=100)
        _write(run_id, status, base)
        append_history(run_id, {"type": "run_completed", "iqm": point}, base)
        return summary

    except Exception as e:
        # fila de fallo para que metrics.csv refleje el aborto
        fail = {c: np.nan for c in METRIC_COLUMNS}
        fail.update(train_seed=-1, env_step=-1)
        df = pd.DataFrame(rows + [fail], columns=METRIC_COLUMNS)
        df["error"] = [""] * len(rows) + [f"{type(e).__name__}: {e}"]
        write_csv(run_dir / "metrics.csv", df)
        append_history(run_id, {"type": "run_failed", "error": str(e)}, base)
        status["status"] = "failed"
        status["error"] = str(e)
        _mark(status, status.get("current_step", STAGES[0]), "failed")
        _write(run_id, status, base)
        raise


def evaluate_run(run_dir: Path) -> pd.DataFrame:
    """Re-evalúa los checkpoints de una ejecución y escribe eval.csv."""
    run_dir = Path(run_dir)
    cfg = load_config(run_dir / "config.yaml")
    env = make_env(cfg.env)
    out = []
    for seed in cfg.train_seeds:
        blocks = load_checkpoint(run_dir / "checkpoints" / f"seed_{seed}.bin")
        act = policy_from_blocks(cfg.algorithm, env, blocks)
        ev = evaluate(env, act, cfg.wiring, cfg.w, cfg.eval_seeds)
        for es, ret, n_int in zip(cfg.eval_seeds, ev.returns, ev.interventions):
            out.append({"train_seed": seed, "eval_seed": es, "return": ret, "interventions": n_int})
        out.append({"train_seed": seed, "eval_seed": -1, "return": ev.mean_return, "interventions": float(np.mean(ev.interventions))})
    df = pd.DataFrame(out, columns=["train_seed", "eval_seed", "return", "interventions"])
    write_csv(run_dir / "eval.csv", df)
    return df

# app/application/report.py
"""
Tabla comparativa a partir de los summary.json de varias ejecuciones.

Agrupa por (env, algorithm, wiring, mitigation, w). Las ejecuciones
repetidas (mismo config_hash en el manifest) cuentan una sola vez y los
directorios sin summary.json se listan como ausentes sin abortar.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.domain.models import RunSummary
from app.infrastructure.files import read_json, write_csv
from app.application.stats import iqm

KEY = ["env", "algorithm", "wiring", "mitigation", "w"]
COLUMNS = KEY + ["n_runs", "n_samples", "mean", "std", "iqm", "interventions_mean", "violations"]


@dataclass
class ReportResult:
    table: pd.DataFrame
    missing: List[str] = field(default_factory=list)
    duplicates: List[str] = field(default_factory=list)


def load_summaries(run_dirs: Iterable[Path]):
    """Devuelve (resúmenes únicos, ausentes, duplicados) en el orden de entrada."""
    seen = set()
    found: List[RunSummary] = []
    missing: List[str] = []
    dups: List[str] = []
    for d in run_dirs:
        d = Path(d)
        raw = read_json(d / "summary.json")
        if not raw:
            missing.append(str(d))
            continue
        try:
            s = RunSummary.model_validate(raw)
        except ValidationError:
            missing.append(str(d))
            continue
        h = s.manifest.get("config_hash", s.run_id)
        if h in seen:
            dups.append(str(d))
            continue
        seen.add(h)
        found.append(s)
    return found, missing, dups


def _rows(summaries: List[RunSummary]) -> List[dict]:
    rows = []
    for s in summaries:
        rows.append({
            "env": s.env,
            "algorithm": s.algorithm,
            "wiring": s.wiring,
            "mitigation": s.mitigation,
            "w": s.w,
            "returns": [r for sr in s.seeds for r in sr.returns],
            "interventions": [i for sr in s.seeds for i in sr.interventions],
            "violations": s.violations,
        })
    return rows


def build_table(summaries: List[RunSummary]) -> pd.DataFrame:
    if not summaries:
        return pd.DataFrame(columns=COLUMNS)
    df = pd.DataFrame(_rows(summaries))
    out = []
    for key, g in df.groupby(KEY, sort=True):
        returns = np.concatenate([np.asarray(r, dtype=np.float64) for r in g["returns"]])
        inter = np.concatenate([np.asarray(i, dtype=np.float64) for i in g["interventions"]])
        row = dict(zip(KEY, key))
        row.update(
            n_runs=len(g),
            n_samples=int(returns.size),
            mean=float(returns.mean()),
            std=float(returns.std(ddof=1)) if returns.size > 1 else 0.0,
            iqm=iqm(returns) if returns.size >= 4 else float("nan"),
            interventions_mean=float(inter.mean()) if inter.size else 0.0,
            violations=int(g["violations"].sum()),
        )
        out.append(row)
    return pd.DataFrame(out, columns=COLUMNS)


def report(run_dirs: Iterable[Path], out_csv: Optional[Path] = None) -> ReportResult:
    summaries, missing, dups = load_summaries(run_dirs)
    table = build_table(summaries)
    if out_csv is not None:
        write_csv(Path(out_csv), table)
    return ReportResult(table=table, missing=missing, duplicates=dups)

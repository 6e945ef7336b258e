# app/infrastructure/sets_fs.py
"""
Lectura de los datos que acompañan a los entornos:

  data/sets/<nombre>.txt  zonotopo en texto plano
  data/envs/<env>.yaml    constantes del entorno

Formato del zonotopo (líneas vacías y '#' se ignoran):

    dim <n>
    center <c_1> ... <c_n>
    generators <eta>
    <g_1,1> ... <g_1,n>      # un generador por fila
    ...
"""
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import yaml

from app.core.config import ENVS_DIR, SETS_DIR
from app.domain.errors import ConfigError
from app.domain.types import Zonotope


def _tokens(path: Path) -> List[List[str]]:
    rows = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    return rows


def _num(tok: str, path: Path) -> float:
    # float() no depende del locale y redondea correctamente el decimal
    try:
        return float(tok)
    except ValueError as exc:
        raise ConfigError(f"{path.name}: número inválido {tok!r}") from exc


def parse_zonotope(path: Path) -> Zonotope:
    if not path.exists():
        raise ConfigError(f"No existe el fichero de zonotopo: {path}")
    rows = _tokens(path)
    try:
        assert rows[0][0] == "dim" and len(rows[0]) == 2
        n = int(rows[0][1])
        assert rows[1][0] == "center" and len(rows[1]) == n + 1
        center = [_num(t, path) for t in rows[1][1:]]
        assert rows[2][0] == "generators" and len(rows[2]) == 2
        eta = int(rows[2][1])
        gens = rows[3:]
        assert len(gens) == eta and all(len(g) == n for g in gens)
    except (AssertionError, IndexError, ValueError) as exc:
        raise ConfigError(f"{path.name}: cabecera o filas con formato inválido") from exc
    G = np.array([[_num(t, path) for t in g] for g in gens], dtype=np.float64).reshape(eta, n).T
    return Zonotope(np.array(center, dtype=np.float64), G)


def format_zonotope(z: Zonotope) -> str:
    lines = [f"dim {z.dim}", "center " + " ".join(repr(float(v)) for v in z.center)]
    lines.append(f"generators {z.n_generators}")
    for j in range(z.n_generators):
        lines.append(" ".join(repr(float(v)) for v in z.generators[:, j]))
    return "\n".join(lines) + "\n"


def load_safe_set(name: str) -> Zonotope:
    return parse_zonotope(SETS_DIR / name)


def load_env_constants(env: str) -> Dict[str, Any]:
    path = ENVS_DIR / f"{env}.yaml"
    if not path.exists():
        raise ConfigError(f"No existe la configuración del entorno: {path}")
    with path.open("r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path.name}: se esperaba un mapeo YAML")
    return data

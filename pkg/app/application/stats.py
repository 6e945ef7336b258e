# app/application/stats.py
"""
Estadística de resultados: IQM con IC bootstrap por percentiles y, como
extra fuera del pipeline por defecto, Kruskal-Wallis + Dunn (Bonferroni).
Nunca modifica los datos de entrada.
"""
from __future__ import annotations

from itertools import combinations
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from app.core.config import CI_LEVEL, N_BOOT


def iqm(samples: Sequence[float]) -> float:
    """Media del 50% central (recorta el 25% por cada lado)."""
    return float(stats.trim_mean(np.asarray(samples, dtype=np.float64), 0.25))


def _iqm_axis(x: np.ndarray, axis: int = -1) -> np.ndarray:
    return stats.trim_mean(x, 0.25, axis=axis)


def iqm_ci(
    samples: Sequence[float],
    n_boot: int = N_BOOT,
    level: float = CI_LEVEL,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, float, float]:
    x = np.array(samples, dtype=np.float64)
    if x.ndim != 1 or x.size < 4:
        raise ValueError(f"iqm_ci necesita al menos 4 muestras (recibidas {x.size})")
    if not np.all(np.isfinite(x)):
        raise ValueError("muestras no finitas")
    point = iqm(x)
    if np.all(x == x[0]):
        return point, point, point
    res = stats.bootstrap(
        (x,),
        _iqm_axis,
        n_resamples=n_boot,
        confidence_level=level,
        method="percentile",
        vectorized=True,
        random_state=rng if rng is not None else np.random.default_rng(0),
    )
    lo = float(res.confidence_interval.low)
    hi = float(res.confidence_interval.high)
    # percentiles de una remuestra discreta: se fuerza a contener el IQM
    return point, min(lo, point), max(hi, point)


def group_tests(groups: Dict[str, Sequence[float]], alpha: float = 0.05) -> dict:
    """
    Kruskal-Wallis sobre todos los grupos y comparaciones por pares de Dunn
    con corrección de Bonferroni.
    """
    names = list(groups)
    if len(names) < 2:
        raise ValueError("se necesitan al menos dos grupos")
    data = [np.asarray(groups[k], dtype=np.float64) for k in names]
    h, p = stats.kruskal(*data)

    pooled = np.concatenate(data)
    ranks = stats.rankdata(pooled)
    N = pooled.size
    _, counts = np.unique(pooled, return_counts=True)
    tie = float(np.sum(counts ** 3 - counts)) / (12.0 * (N - 1))
    sigma2 = N * (N + 1) / 12.0 - tie
    mean_rank, off = {}, 0
    for k, d in zip(names, data):
        mean_rank[k] = float(np.mean(ranks[off:off + d.size]))
        off += d.size

    pairs = list(combinations(range(len(names)), 2))
    out = []
    for i, j in pairs:
        ni, nj = data[i].size, data[j].size
        z = (mean_rank[names[i]] - mean_rank[names[j]]) / np.sqrt(sigma2 * (1.0 / ni + 1.0 / nj))
        p_raw = 2.0 * stats.norm.sf(abs(z))
        p_adj = min(1.0, p_raw * len(pairs))
        out.append({"a": names[i], "b": names[j], "z": float(z), "p": float(p_adj), "significant": p_adj < alpha})
    return {"kruskal_h": float(h), "kruskal_p": float(p), "dunn": out}

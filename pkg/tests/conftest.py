# tests/conftest.py
import os, sys

import numpy as np
import pytest

# añade la raíz del repo (el directorio padre de /tests) al PYTHONPATH
ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from app.domain.models import ExperimentConfig, Td3Params, A2cParams  # noqa: E402


@pytest.fixture(autouse=True)
def runs_dir(tmp_path, monkeypatch):
    """Cada test escribe sus ejecuciones en un directorio temporal propio."""
    d = tmp_path / "runs"
    monkeypatch.setenv("RUNS_DIR", str(d))
    return d


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tiny_config(**overrides) -> ExperimentConfig:
    """Configuración de pocos pasos para tests de integración."""
    base = dict(
        env="pendulum",
        algorithm="td3",
        wiring="se",
        mitigation="none",
        w=1.0,
        total_steps=60,
        eval_interval=30,
        train_seeds=[0, 1],
        eval_seeds=[100, 101],
        td3=Td3Params(warmup_steps=20, batch_size=8, replay_capacity=200, hidden=[8, 8]),
        a2c=A2cParams(n_steps=5, hidden=[8, 8]),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


@pytest.fixture
def tiny():
    return tiny_config

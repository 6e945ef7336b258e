# tests/test_pipeline.py
from __future__ import annotations

import json

import numpy as np
import pandas as pd
import pytest
import yaml

from app.domain.errors import ConfigError, NumericalError
from app.application import pipeline
from app.application.pipeline import (
    METRIC_COLUMNS,
    STAGES,
    config_hash,
    evaluate_run,
    load_config,
    make_run_id,
    run_experiment,
)
from app.infrastructure.history_repo_fs import read_history
from app.infrastructure.run_repo_fs import read_status


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(bad)
    wrong = tmp_path / "wrong.yaml"
    wrong.write_text(yaml.safe_dump({"env": "pendulum", "algorithm": "td3", "wiring": "se", "mitigation": "psl"}), encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(wrong)


def test_desk_defaults_per_env(tmp_path):
    path = tmp_path / "q.yaml"
    path.write_text(yaml.safe_dump({"env": "quadrotor", "algorithm": "a2c", "wiring": "sp", "mitigation": "penalty"}), encoding="utf-8")
    cfg = load_config(path)
    assert cfg.total_steps == 100_000 and cfg.eval_interval == 10_000
    assert cfg.train_seeds == [0, 1, 2] and len(cfg.eval_seeds) == 5
    zero = tmp_path / "zero.yaml"
    zero.write_text(yaml.safe_dump({"env": "pendulum", "algorithm": "td3", "total_steps": 0}), encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(zero)


def test_shipped_experiments_are_valid():
    from app.core.config import DATA_DIR

    for path in sorted((DATA_DIR / "experiments").glob("*.yaml")):
        cfg = load_config(path)
        assert make_run_id(cfg).startswith(cfg.label())


def test_hash_ignores_output_dir(tiny, tmp_path):
    a = tiny(output_dir=str(tmp_path / "a"))
    b = tiny(output_dir=str(tmp_path / "b"))
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(tiny(w=2.0))


def test_run_writes_artifacts_and_is_deterministic(tiny, tmp_path):
    a = tiny(output_dir=str(tmp_path / "a"))
    b = tiny(output_dir=str(tmp_path / "b"))
    summary = run_experiment(a)
    run_experiment(b)
    run_id = make_run_id(a)
    da, db = tmp_path / "a" / run_id, tmp_path / "b" / run_id

    for name in ("config.yaml", "metrics.csv", "summary.json", "manifest.json", "status.json", "history.jsonl"):
        assert (da / name).exists(), name
    assert (da / "checkpoints" / "seed_0.bin").exists()
    assert (da / "checkpoints" / "seed_1.bin").exists()

    # misma configuración => mismos bytes
    assert (da / "metrics.csv").read_bytes() == (db / "metrics.csv").read_bytes()
    assert (da / "checkpoints" / "seed_1.bin").read_bytes() == (db / "checkpoints" / "seed_1.bin").read_bytes()

    df = pd.read_csv(da / "metrics.csv")
    assert list(df.columns) == METRIC_COLUMNS
    assert df[["train_seed", "env_step"]].values.tolist() == [[0, 30], [0, 60], [1, 30], [1, 60]]

    assert summary.ci_low <= summary.iqm <= summary.ci_high
    assert len(summary.seeds) == 2 and all(len(s.returns) == 2 for s in summary.seeds)
    manifest = json.loads((da / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["config_hash"] == config_hash(a)
    assert {"numpy", "scipy", "code_version", "run_id"} <= set(manifest)

    status = read_status(run_id, tmp_path / "a")
    assert status["status"] == "completed" and status["progress"] == 100
    assert [s["status"] for s in status["steps"]] == ["ok"] * len(STAGES)

    types = [e["type"] for e in read_history(run_id, base=tmp_path / "a")]
    assert types[0] == "run_started" and types[-1] == "run_completed"
    assert types.count("stage_end") == len(STAGES)
    assert "eval_done" in types


def test_evaluate_run_matches_summary(tiny, tmp_path):
    cfg = tiny(output_dir=str(tmp_path))
    summary = run_experiment(cfg)
    df = evaluate_run(tmp_path / make_run_id(cfg))
    assert (tmp_path / make_run_id(cfg) / "eval.csv").exists()
    per_episode = df[df["eval_seed"] >= 0]
    assert len(per_episode) == 4
    expected = [r for s in summary.seeds for r in s.returns]
    assert np.allclose(per_episode["return"].to_numpy(), expected)


def test_failure_leaves_failed_status_and_row(tiny, tmp_path, monkeypatch):
    def boom(cfg, seed):
        raise NumericalError("gradiente no finito")

    monkeypatch.setattr(pipeline, "run_seed", boom)
    cfg = tiny(output_dir=str(tmp_path))
    with pytest.raises(NumericalError):
        run_experiment(cfg)
    run_id = make_run_id(cfg)
    df = pd.read_csv(tmp_path / run_id / "metrics.csv")
    assert df["train_seed"].tolist() == [-1]
    assert "NumericalError" in df["error"].iloc[0]
    status = read_status(run_id, tmp_path)
    assert status["status"] == "failed"
    assert any(s["status"] == "failed" for s in status["steps"])
    assert read_history(run_id, base=tmp_path)[-1]["type"] == "run_failed"

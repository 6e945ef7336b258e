# tests/test_min_example.py
from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from app.domain.errors import ConfigError, DimensionError
from app.domain.types import Mitigation, SafeActionSet, WiringMode, Zonotope
from app.application.min_example import (
    CSV_COLUMNS,
    make_setup,
    min_example,
    polygon_halfspaces,
    run_all,
    safe_polygon,
    signed_distance,
)
from app.application.safety.projection import is_member

STEPS = 50


@pytest.fixture(scope="module")
def quad(tmp_path_factory):
    out = tmp_path_factory.mktemp("min_example")
    setup = make_setup("quadrotor")
    results = run_all("quadrotor", out, steps=STEPS, seed=0)
    H = polygon_halfspaces(safe_polygon(setup.safe_set, setup.state.x))
    return out, setup, results, H


def _final(results, wiring: WiringMode, mit: Mitigation) -> pd.Series:
    return results[f"quadrotor-{wiring.value}-{mit.value}"].final


def test_polygon_of_box():
    ss = SafeActionSet.direct(Zonotope.box([-1.0, -2.0], [1.0, 2.0]))
    V = safe_polygon(ss)
    assert V.shape == (4, 2)
    H = polygon_halfspaces(V)
    assert signed_distance([0.0, 0.0], [0.0, 0.0], H) == pytest.approx(-1.0, abs=1e-8)
    assert signed_distance([3.0, 0.0], [1.0, 0.0], H) == pytest.approx(2.0)
    with pytest.raises(DimensionError):
        safe_polygon(SafeActionSet.direct(Zonotope.box([-1.0], [1.0])))


def test_unknown_setup_and_variant():
    with pytest.raises(ConfigError):
        make_setup("pendulum")
    with pytest.raises(ConfigError):
        min_example("quadrotor", WiringMode.UNSAFE, Mitigation.PSL, steps=1)


def test_csvs_are_written(quad):
    out, _, results, _ = quad
    assert len(results) == 6
    for name in results:
        df = pd.read_csv(out / f"{name}.csv")
        assert list(df.columns) == CSV_COLUMNS
        assert df["step"].tolist() == list(range(STEPS + 1))


def test_initial_action_outside(quad):
    _, setup, results, _ = quad
    first = results["quadrotor-se-none"].iterates.iloc[0]
    assert first["signed_distance"] == pytest.approx(4.02, abs=0.05)
    assert not is_member(setup.safe_set, setup.u0, setup.state.x)


def test_safe_env_stalls_outside(quad):
    _, _, results, _ = quad
    assert _final(results, WiringMode.SAFE_ENV, Mitigation.NONE)["signed_distance"] > 0.05


def test_safe_policy_stalls_on_boundary(quad):
    _, _, results, H = quad
    f = _final(results, WiringMode.SAFE_POLICY, Mitigation.NONE)
    assert f["signed_distance"] > 0.05
    u_phi = np.array([f["u_phi_0"], f["u_phi_1"]])
    assert abs(np.max(H[:, :2] @ u_phi + H[:, 2])) <= 1e-3


def test_projection_loss_reaches_boundary(quad):
    _, _, results, _ = quad
    f = _final(results, WiringMode.SAFE_POLICY, Mitigation.PSL)
    assert 0.0 <= f["signed_distance"] <= 1e-3


def test_penalties_end_strictly_inside(quad):
    _, _, results, _ = quad
    assert _final(results, WiringMode.SAFE_ENV, Mitigation.PENALTY)["signed_distance"] < 0.0
    assert _final(results, WiringMode.SAFE_POLICY, Mitigation.PENC)["signed_distance"] < 0.0


def test_unsafe_heads_to_hover(quad):
    _, setup, results, _ = quad
    f = _final(results, WiringMode.UNSAFE, Mitigation.NONE)
    hover = setup.env.u_hover
    assert np.linalg.norm([f["u_0"] - hover, f["u_1"] - hover]) < 0.5


@pytest.mark.slow
def test_seeker_projected_iterates_stay_safe(tmp_path):
    setup = make_setup("seeker")
    res = min_example("seeker", WiringMode.SAFE_POLICY, Mitigation.NONE, steps=30, setup=setup, out_csv=tmp_path / "s.csv")
    for _, row in res.iterates.iterrows():
        assert is_member(setup.safe_set, [row["u_phi_0"], row["u_phi_1"]])
    # el óptimo queda fuera: el iterado termina en la frontera
    assert res.final["signed_distance"] > 0.0

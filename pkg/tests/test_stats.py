# tests/test_stats.py
from __future__ import annotations

import numpy as np
import pytest

from app.application.stats import group_tests, iqm, iqm_ci


def test_iqm_trims_quartiles():
    assert iqm([1.0, 2.0, 3.0, 4.0]) == pytest.approx(2.5)
    assert iqm([0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 100.0]) == pytest.approx(1.0)


def test_ci_of_constant_samples_collapses():
    assert iqm_ci([3.0] * 6) == (3.0, 3.0, 3.0)


def test_ci_contains_point_and_is_reproducible():
    x = np.random.default_rng(5).normal(size=100)
    point, lo, hi = iqm_ci(x, n_boot=500, rng=np.random.default_rng(1))
    assert lo <= point <= hi
    assert hi - lo < 1.0
    again = iqm_ci(x, n_boot=500, rng=np.random.default_rng(1))
    assert again == (point, lo, hi)


def test_ci_does_not_modify_input():
    x = np.array([4.0, 1.0, 3.0, 2.0, 5.0])
    iqm_ci(x, n_boot=100)
    assert np.array_equal(x, [4.0, 1.0, 3.0, 2.0, 5.0])


def test_ci_rejects_small_or_non_finite_samples():
    with pytest.raises(ValueError):
        iqm_ci([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        iqm_ci([1.0, 2.0, np.nan, 4.0])


def test_group_tests_detects_shift():
    rng = np.random.default_rng(0)
    out = group_tests({"a": rng.normal(0.0, 1.0, 30), "b": rng.normal(3.0, 1.0, 30), "c": rng.normal(0.0, 1.0, 30)})
    assert out["kruskal_p"] < 0.01
    pairs = {(d["a"], d["b"]): d for d in out["dunn"]}
    assert pairs[("a", "b")]["significant"] and pairs[("b", "c")]["significant"]
    with pytest.raises(ValueError):
        group_tests({"a": [1.0, 2.0]})

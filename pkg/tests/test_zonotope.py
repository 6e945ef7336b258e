# tests/test_zonotope.py
from __future__ import annotations

from itertools import product

import numpy as np
import pytest

from app.domain.errors import DimensionError
from app.domain.types import AffineDynamics, SafeActionSet, Zonotope
from app.application.safety.zonotope import (
    containment_constraints,
    contains_point,
    halfspace_representation,
    interval_hull,
    linear_map,
    reachable_set,
    translate,
    vertices_2d,
)
from app.application.safety.projection import feasible_aux, is_member, project
from oracles import hrep_by_signs, inside, random_zonotope_2d


def test_box_and_point_constructors():
    z = Zonotope.box([-1.0, 0.0], [1.0, 4.0])
    assert np.allclose(z.center, [0.0, 2.0])
    assert np.allclose(z.generators, np.diag([1.0, 2.0]))
    p = Zonotope.point([3.0, 4.0])
    assert p.n_generators == 0 and p.dim == 2


def test_generators_must_match_center():
    with pytest.raises(DimensionError):
        Zonotope(np.zeros(2), np.zeros((3, 1)))


def test_interval_hull_and_maps():
    z = Zonotope(np.array([1.0, 0.0]), np.array([[1.0, 0.5], [0.0, 1.0]]))
    lo, hi = interval_hull(z)
    assert np.allclose(lo, [-0.5, -1.0]) and np.allclose(hi, [2.5, 1.0])
    m = linear_map(z, 2.0 * np.eye(2))
    assert np.allclose(m.generators, 2.0 * z.generators)
    t = translate(z, [1.0, 1.0])
    assert np.allclose(t.center, [2.0, 1.0])
    with pytest.raises(DimensionError):
        linear_map(z, np.eye(3))


def test_contains_point_box():
    z = Zonotope.box([-1.0, -1.0], [1.0, 1.0])
    assert contains_point(z, [1.0, -1.0])
    assert contains_point(z, [0.2, 0.3])
    assert not contains_point(z, [1.01, 0.0])


def test_halfspaces_match_sign_enumeration(rng):
    for _ in range(5):
        z = random_zonotope_2d(rng, 4)
        H, d = halfspace_representation(z)
        H2, d2 = hrep_by_signs(z)
        P = rng.uniform(-4.0, 4.0, size=(500, 2))
        assert np.array_equal(inside(H, d, P, 1e-9), inside(H2, d2, P, 1e-9))


def test_halfspaces_reject_flat_zonotope():
    z = Zonotope(np.zeros(2), np.array([[1.0], [1.0]]))
    with pytest.raises(DimensionError):
        halfspace_representation(z)


def test_vertices_2d_box_counterclockwise():
    V = vertices_2d(Zonotope.box([-1.0, -2.0], [1.0, 2.0]))
    assert V.shape == (4, 2)
    assert {tuple(v) for v in np.round(V, 12)} == {(-1, -2), (1, -2), (1, 2), (-1, 2)}
    # área con signo positiva
    x, y = V[:, 0], V[:, 1]
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    assert area == pytest.approx(8.0)


def test_reachable_set_includes_disturbance_center():
    dyn = AffineDynamics(A=np.eye(2), B=np.eye(2), c=np.zeros(2), E=np.eye(2))
    W = Zonotope(np.array([0.1, 0.0]), 0.05 * np.eye(2))
    R = reachable_set([1.0, 1.0], [0.0, 1.0], dyn, W)
    assert np.allclose(R.center, [1.1, 2.0])
    assert np.allclose(R.generators, 0.05 * np.eye(2))


def test_containment_feasibility():
    outer = Zonotope.box([-1.0, -1.0], [1.0, 1.0])
    small = Zonotope(np.array([0.2, 0.0]), 0.3 * np.eye(2))
    big = Zonotope(np.zeros(2), 1.5 * np.eye(2))
    assert feasible_aux(containment_constraints(small, outer), np.zeros(0)) is not None
    assert feasible_aux(containment_constraints(big, outer), np.zeros(0)) is None


def _parallelogram(rng) -> Zonotope:
    a = rng.uniform(0.0, np.pi)
    b = a + rng.uniform(0.4, np.pi - 0.4)
    G = np.array([[np.cos(a), np.cos(b)], [np.sin(a), np.sin(b)]]) * rng.uniform(0.5, 1.5, size=2)
    return Zonotope(rng.uniform(-0.5, 0.5, size=2), G)


def _vertex_margin(inner: Zonotope, outer: Zonotope) -> float:
    # > 0: algún vértice de inner queda fuera de outer
    H, d = hrep_by_signs(outer)
    signs = np.array(list(product([-1.0, 1.0], repeat=inner.n_generators)))
    V = inner.center + signs @ inner.generators.T
    return float(np.max(V @ H.T - d))


def test_containment_agrees_with_vertex_enumeration(rng):
    # con outer de dos generadores (Gamma y omega únicos) la contención es exacta
    checked = agree = 0
    while checked < 1000:
        outer = _parallelogram(rng)
        g = random_zonotope_2d(rng, int(rng.integers(1, 5)))
        inner = Zonotope(outer.center + rng.uniform(-0.6, 0.6, size=2), g.generators * rng.uniform(0.1, 0.7))
        margin = _vertex_margin(inner, outer)
        if abs(margin) < 1e-4:
            continue
        feasible = feasible_aux(containment_constraints(inner, outer), np.zeros(0)) is not None
        assert feasible == (margin < 0.0)
        checked += 1
        agree += feasible
    # el muestreo cubre ambos casos
    assert 0 < agree < checked


def test_containment_is_sound_for_general_outer(rng):
    certified = 0
    for _ in range(300):
        outer = random_zonotope_2d(rng, int(rng.integers(3, 5)))
        g = random_zonotope_2d(rng, int(rng.integers(1, 5)))
        inner = Zonotope(outer.center + rng.uniform(-0.2, 0.2, size=2), g.generators * rng.uniform(0.05, 0.4))
        if feasible_aux(containment_constraints(inner, outer), np.zeros(0)) is not None:
            certified += 1
            assert _vertex_margin(inner, outer) <= 1e-5
    assert certified > 0


def test_direct_membership_ignores_generator_order_and_sign(rng):
    for _ in range(10):
        z = random_zonotope_2d(rng, 4)
        perm = rng.permutation(4)
        flips = rng.choice([-1.0, 1.0], size=4)
        z2 = Zonotope(z.center, z.generators[:, perm] * flips)
        a, b = SafeActionSet.direct(z), SafeActionSet.direct(z2)
        for u in z.center + rng.uniform(-2.5, 2.5, size=(20, 2)):
            assert is_member(a, u) == is_member(b, u)
            assert np.allclose(project(a, None, u).u_phi, project(b, None, u).u_phi, atol=1e-6)


def test_reach_mode_with_identity_dynamics_matches_direct(rng):
    # x' = u sin perturbación: Reach(x, u) en U  <=>  u en U
    dyn = AffineDynamics(A=np.zeros((2, 2)), B=np.eye(2), c=np.zeros(2), E=np.eye(2))
    W = Zonotope.point([0.0, 0.0])
    for _ in range(5):
        z = random_zonotope_2d(rng, 3)
        direct = SafeActionSet.direct(z)
        reach = SafeActionSet.reach([0.3, -0.2], dyn, W, z)
        for u in z.center + rng.uniform(-2.5, 2.5, size=(20, 2)):
            assert is_member(direct, u) == is_member(reach, u)
            d = project(direct, None, u)
            r = project(reach, None, u)
            assert r.solved
            assert np.allclose(d.u_phi, r.u_phi, atol=1e-6)

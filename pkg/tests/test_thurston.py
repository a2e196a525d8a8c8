from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import pipeline
from oracles import irreducible_by_powers, orbifold_brute_force
from newtongraph.errors import InvalidSpecError
from newtongraph.thurston import (
    INFINITE,
    LiftDatum,
    OrbifoldMapData,
    is_irreducible,
    leading_eigenvalue,
    lift_data_from_json,
    obstruction_verdict,
    orbifold_data_from_graph,
    orbifold_signature,
    thurston_matrix,
)


def test_matrix_examples():
    assert thurston_matrix([LiftDatum(0, ((0, 2),))]).tolist() == [[0.5]]
    assert thurston_matrix([LiftDatum(0, ((0, 2), (0, 2)))]).tolist() == [[1.0]]
    m = thurston_matrix([LiftDatum(0, ((1, 1),)), LiftDatum(1, ((0, 4),))])
    assert m.tolist() == [[0, 0.25], [1, 0]]


def test_peripheral_components_contribute_nothing():
    assert thurston_matrix([LiftDatum(0, ((None, 2), (0, 3)))], 1).tolist() == [[pytest.approx(1 / 3)]]


def test_inconsistent_lift_data_is_rejected():
    with pytest.raises(InvalidSpecError):
        thurston_matrix([LiftDatum(0, ((3, 1),))], 2)
    with pytest.raises(InvalidSpecError):
        thurston_matrix([LiftDatum(0, ((0, 0),))])


def test_lift_data_json():
    n, lifts = lift_data_from_json(
        {"curves": 2, "lifts": [{"source": 0, "components": [{"target": 1, "degree": 1}]},
                                {"source": 1, "components": [{"target": None, "degree": 2}]}]}
    )
    assert n == 2
    assert thurston_matrix(lifts, n).tolist() == [[0, 0], [1, 0]]


@pytest.mark.parametrize("m,lam", [([[1]], 1.0), ([[0, 0.25], [1, 0]], 0.5), ([[2, 1], [1, 2]], 3.0)])
def test_eigenvalue_examples(m, lam):
    assert abs(leading_eigenvalue(m) - lam) < 1e-10


@pytest.mark.parametrize("m,expected", [([[0, 1], [1, 0]], True), ([[1, 0], [0, 1]], False), ([[0, 1], [0, 0]], False), ([[0]], True)])
def test_irreducibility_examples(m, expected):
    assert is_irreducible(m) is expected


def test_obstruction_examples():
    assert obstruction_verdict([[1]]).verdict == "obstruction candidate"
    assert obstruction_verdict([[0.5]]).verdict == "no obstruction"
    rep = obstruction_verdict([LiftDatum(0, ((1, 1),)), LiftDatum(1, ((0, 4),))])
    assert rep.verdict == "no obstruction"
    assert rep.eigenvalue == pytest.approx(0.5)
    # reducible with a large eigenvalue is not an irreducible obstruction
    assert obstruction_verdict([[2, 0], [0, 0.1]]).verdict == "no obstruction"


matrices = st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(st.sampled_from([0, 0, 0.25, 0.5, 1, 2, 3]), min_size=n, max_size=n), min_size=n, max_size=n)
)


@settings(max_examples=80, deadline=None)
@given(matrices)
def test_perron_bounds(m):
    a = np.array(m, dtype=float)
    lam = leading_eigenvalue(a)
    assert lam >= a.diagonal().max() - 1e-12
    assert lam <= a.sum(axis=0).max() + 1e-12
    assert abs(lam - max(abs(np.linalg.eigvals(a)))) < 1e-8


@settings(max_examples=60, deadline=None)
@given(matrices, st.floats(0.1, 10))
def test_eigenvalue_scales(m, c):
    a = np.array(m, dtype=float)
    assert abs(leading_eigenvalue(c * a) - c * leading_eigenvalue(a)) < 1e-9 * max(1.0, c * leading_eigenvalue(a))


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.lists(st.lists(st.integers(0, 1), min_size=n, max_size=n), min_size=n, max_size=n)))
def test_irreducibility_matches_boolean_powers(m):
    assert is_irreducible(m) == irreducible_by_powers(m)


# -- orbifold -----------------------------------------------------------------


def test_square_pattern_is_euclidean():
    sig = orbifold_signature(OrbifoldMapData(("0", "inf"), {"0": "0", "inf": "inf"}, {"0": 2, "inf": 2}))
    assert sig.v == {"0": INFINITE, "inf": INFINITE}
    assert sig.chi == 0 and not sig.hyperbolic


def test_unbranched_points_are_trivial():
    sig = orbifold_signature(OrbifoldMapData(("a", "b"), {"a": "b", "b": "b"}, {}))
    assert sig.v == {"a": 1, "b": 1}
    assert sig.chi == 2 and not sig.hyperbolic


def test_newton_graph_marked_set_is_hyperbolic():
    res = pipeline(3)
    sig = orbifold_signature(orbifold_data_from_graph(res.graph, res.map))
    assert sig.hyperbolic
    assert sig.chi == Fraction(-3, 2)
    assert sorted(v for v in sig.v.values() if v != INFINITE) == [1, 2]


def test_image_outside_marked_set_is_rejected():
    with pytest.raises(InvalidSpecError):
        OrbifoldMapData(("a",), {"a": "b"}, {})


@st.composite
def orbifold_data(draw):
    n = draw(st.integers(1, 4))
    pts = tuple(f"x{i}" for i in range(n))
    image = {p: draw(st.sampled_from(pts)) for p in pts}
    degree = {p: draw(st.sampled_from([1, 1, 2, 3])) for p in pts}
    return OrbifoldMapData(pts, image, degree)


@settings(max_examples=60, deadline=None)
@given(orbifold_data())
def test_orbifold_weights_are_least_divisible(data):
    sig = orbifold_signature(data)
    for x in data.points:
        for y in data.preimages(x):
            if sig.v[x] != INFINITE:
                assert sig.v[y] != INFINITE
                assert sig.v[x] % (sig.v[y] * data.degree.get(y, 1)) == 0
    finite = [v for v in sig.v.values() if v != INFINITE]
    assume(all(v <= 16 for v in finite))
    assert orbifold_brute_force(data.points, data.image, data.degree) == sig.v


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 5), st.integers(0, 3), st.data())
def test_three_fixed_branch_points_force_hyperbolic(k, extra, data):
    pts = tuple(f"p{i}" for i in range(k + extra))
    image, degree = {}, {}
    for i, p in enumerate(pts):
        if i < k:
            image[p], degree[p] = p, data.draw(st.integers(2, 4))
        else:
            image[p], degree[p] = data.draw(st.sampled_from(pts)), data.draw(st.integers(1, 3))
    sig = orbifold_signature(OrbifoldMapData(pts, image, degree))
    assert sig.hyperbolic
    assert sig.chi <= -1
    assert all(sig.v[p] == math.inf for p in pts[:k])

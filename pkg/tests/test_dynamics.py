from __future__ import annotations

import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import roots_of_unity, unity_map
from newtongraph.complex_poly import Polynomial, RationalMap, RootSpec, is_inf, newton_map, newton_map_from_roots
from newtongraph.dynamics import (
    basin_index,
    basin_index_array,
    classify_fixed_points,
    critical_points,
    distance_to_polyline,
    fixed_ray_directions,
    is_newton_map,
    is_postcritically_fixed,
    lift_curve,
    local_degree_at,
    multiplier_at_infinity,
    trace_internal_ray,
)
from newtongraph.errors import NotNewtonMapError

coord = st.floats(-2, 2, allow_nan=False, allow_infinity=False)
points = st.builds(complex, coord, coord)


def separated(pts, gap=0.1):
    return all(abs(a - b) > gap for i, a in enumerate(pts) for b in pts[i + 1:])


def test_fixed_points_of_z3_minus_1():
    recs = classify_fixed_points(unity_map(3))
    finite = [r for r in recs if not is_inf(r.location)]
    assert len(finite) == 3
    assert all(abs(r.multiplier) < 1e-12 and r.m == 1 for r in finite)
    assert all(r.classification == "superattracting" for r in finite)
    assert is_inf(recs[-1].location)
    assert recs[-1].multiplier == pytest.approx(1.5)
    assert recs[-1].classification == "repelling"


def test_multiple_root_has_multiplier_m_minus_1_over_m():
    f = newton_map_from_roots(RootSpec(((1 + 0j, 2), (-1 + 0j, 1), (2j, 1))))
    recs = classify_fixed_points(f)
    at_one = [r for r in recs if not is_inf(r.location) and abs(r.location - 1) < 1e-9]
    assert at_one[0].m == 2
    assert at_one[0].multiplier == pytest.approx(0.5, abs=1e-9)


def test_perturbed_linear_coefficient_is_not_newton():
    # (2z^3 + 1.1)/(3z^2) is exactly the Newton map of z^3 - 1.1, so perturb elsewhere
    assert is_newton_map(newton_map(Polynomial((-1.1, 0, 0, 1)))).ok
    f = RationalMap(Polynomial((1, 0.05, 0, 2)), Polynomial((0, 0, 3)))
    with pytest.raises(NotNewtonMapError) as info:
        classify_fixed_points(f)
    assert info.value.multiplier is not None
    assert not is_newton_map(f).ok


def test_degree_two_fails_the_gate():
    rep = is_newton_map(newton_map_from_roots(RootSpec.simple([1, -1])))
    assert not rep.ok
    assert any("< 3" in r for r in rep.reasons)


def test_multiplier_at_infinity():
    assert multiplier_at_infinity(unity_map(4)) == pytest.approx(4 / 3)


@pytest.mark.parametrize("d", [3, 4, 5])
def test_critical_set_of_z_d_minus_1(d):
    crit = critical_points(unity_map(d))
    roots = roots_of_unity(d)
    at_roots = [c for c in crit if min(abs(c.location - r) for r in roots) < 1e-9]
    at_zero = [c for c in crit if abs(c.location) < 1e-6]
    assert len(at_roots) == d and all(c.local_degree == 2 for c in at_roots)
    assert len(at_zero) == 1 and at_zero[0].local_degree == d - 1
    assert len(crit) == d + 1
    assert all(c.landed for c in crit)


@settings(max_examples=40, deadline=None)
@given(st.lists(points, min_size=3, max_size=6))
def test_riemann_hurwitz_count(pts):
    if not separated(pts):
        return
    f = newton_map_from_roots(RootSpec.simple(pts))
    assert sum(c.local_degree - 1 for c in critical_points(f, cutoff=0)) == 2 * f.degree - 2


def test_pcf_verdicts():
    rep = is_postcritically_fixed(unity_map(3))
    assert rep.is_pcf
    steps = sorted(s for _, s in rep.landing_steps)
    assert steps == [0, 0, 0, 1]
    # z^3 - 2z + 2 has a superattracting 2-cycle {0, 1}
    f = newton_map(Polynomial((2, -2, 0, 1)))
    assert is_postcritically_fixed(f).verdict == "undecided"


def test_basin_index_scalar_and_array_agree():
    f = unity_map(3)
    v = basin_index(f, 2.0)
    assert v.outcome == "converges"
    assert abs(f.roots[v.root_index][0] - 1) < 1e-12
    grid = np.array([[2.0, -1 + 1j], [-1 - 1j, 0.3 + 0.001j]])
    labels, _ = basin_index_array(f, grid)
    for z, lab in zip(grid.ravel(), labels.ravel()):
        assert basin_index(f, complex(z)).root_index == lab
    assert basin_index(f, 0).outcome == "escapes"


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-3, 3))
def test_lifted_curve_maps_onto_curve(r, phase):
    f = unity_map(3)
    start = r * cmath.exp(1j * phase)
    curve = [f(start) + 0.01 * k * (1 + 0.5j) for k in range(20)]
    lifted = lift_curve(f, curve, start)
    assert len(lifted) == len(curve)
    for w, c in zip(lifted, curve):
        assert abs(f(w) - c) < 1e-9 * max(1.0, abs(c))


def test_local_degree_and_ray_directions():
    f = newton_map_from_roots(RootSpec.simple([-1, 0, 1]))
    assert local_degree_at(f, 0)[0] == 3
    assert local_degree_at(f, 1)[0] == 2
    dirs = sorted(fixed_ray_directions(f, 0), key=lambda e: e.imag)
    assert dirs[0] == pytest.approx(-1j, abs=1e-12)
    assert dirs[1] == pytest.approx(1j, abs=1e-12)


def test_ray_of_root_one_is_the_real_axis():
    f = unity_map(3)
    i = next(k for k, (z, _) in enumerate(f.roots) if abs(z - 1) < 1e-12)
    ray = trace_internal_ray(f, i, 1)
    assert ray.points[0] == f.roots[i][0]
    assert abs(ray.points[-1]) > 1e6
    inside = [z for z in ray.points if abs(z) <= 1e3]
    assert max(abs(z.imag) for z in inside) < 1e-6
    assert min(z.real for z in inside) >= 1 - 1e-12


def test_ray_is_invariant():
    f = unity_map(4)
    ray = trace_internal_ray(f, 1, 1)
    pts = [z for z in ray.points if abs(z) < 1e4]
    images = [f(z) for z in pts[:: max(1, len(pts) // 60)]]
    assert max(distance_to_polyline(w, ray.points) for w in images if not is_inf(w) and abs(w) < 1e4) < 1e-6

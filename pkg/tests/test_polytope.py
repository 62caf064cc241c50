import itertools
from fractions import Fraction

import pytest

from mmpkit.polytope import RationalPolytope, convex_hull_contains, simplex_polytope


def unit_simplex(scale=1):
    # x >= 0, y >= 0, x + y <= scale
    return RationalPolytope.from_inequalities(
        2,
        [((1, 0), 0), ((0, 1), 0), ((-1, -1), -scale)],
    )


def naive_lattice_points(poly, box=50):
    points = []
    for p in itertools.product(range(-box, box + 1), repeat=poly.dim_ambient):
        if poly.contains(p):
            points.append(p)
    return points


def test_unit_simplex_lattice_points():
    assert unit_simplex().lattice_points() == [(0, 0), (0, 1), (1, 0)]


def test_doubled_simplex_has_six_points():
    pts = unit_simplex(2).lattice_points()
    assert len(pts) == 6
    assert pts == naive_lattice_points(unit_simplex(2), box=3)


def test_empty_polytope():
    poly = RationalPolytope.from_inequalities(1, [((1,), 1), ((-1,), 0)])
    assert poly.is_empty()
    assert poly.lattice_points() == []
    assert poly.dimension() == -1


def test_unbounded_enumeration_rejected():
    half_line = RationalPolytope.from_inequalities(1, [((1,), 0)])
    assert not half_line.is_bounded()
    with pytest.raises(ValueError, match="bounded"):
        half_line.lattice_points()


def test_vertices_of_square():
    square = RationalPolytope.from_inequalities(
        2,
        [((1, 0), 0), ((-1, 0), -1), ((0, 1), 0), ((0, -1), -1)],
    )
    assert square.vertices() == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert square.dimension() == 2


def test_vertices_satisfy_inequalities_with_tight_subset():
    poly = unit_simplex(3)
    for v in poly.vertices():
        assert poly.contains(v)
        tight = [h for h in poly.halfspaces if h.tight(v)]
        assert len(tight) >= 2


def test_round_trip_hull_equals_polytope():
    poly = RationalPolytope.from_inequalities(
        2,
        [((2, 1), 0), ((-1, 1), -3), ((0, -1), -2)],
    )
    verts = poly.vertices()
    for p in poly.lattice_points():
        assert convex_hull_contains(verts, p)
    for v in verts:
        assert poly.contains(v)


def test_lattice_points_agree_with_naive_scan():
    polys = [
        unit_simplex(5),
        RationalPolytope.from_inequalities(
            2, [((1, 0), Fraction(-1, 2)), ((-1, 0), -2), ((0, 1), 0), ((0, -1), Fraction(-7, 3))]
        ),
        RationalPolytope.from_inequalities(
            3,
            [
                ((1, 0, 0), 0),
                ((0, 1, 0), 0),
                ((0, 0, 1), 0),
                ((-1, -1, -1), -3),
            ],
        ),
    ]
    for poly in polys:
        assert poly.lattice_points() == naive_lattice_points(poly, box=6)


def test_rational_vertices():
    poly = RationalPolytope.from_inequalities(
        1, [((2,), 1), ((-3,), -2)]
    )
    assert poly.vertices() == ((Fraction(1, 2),), (Fraction(2, 3),))
    assert poly.lattice_points() == []


def test_scaled_dilate():
    assert unit_simplex().scaled(2).lattice_points() == unit_simplex(2).lattice_points()


def test_simplex_polytope_construction():
    tri = simplex_polytope([(0, 0), (1, 0), (0, 1)])
    assert sorted(tri.lattice_points()) == [(0, 0), (0, 1), (1, 0)]


def test_dimension_of_segment_and_point():
    seg = RationalPolytope.from_inequalities(
        2, [((1, 0), 0), ((-1, 0), -2), ((0, 1), 0), ((0, -1), 0)]
    )
    assert seg.dimension() == 1
    pt = RationalPolytope.from_inequalities(
        2, [((1, 0), 0), ((-1, 0), 0), ((0, 1), 0), ((0, -1), 0)]
    )
    assert pt.dimension() == 0
    assert pt.lattice_points() == [(0, 0)]

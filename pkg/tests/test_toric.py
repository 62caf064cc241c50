import random
from fractions import Fraction

import pytest

from mmpkit.linalg import lattice_index, smith_diagonal
from mmpkit.toric import (
    Cone,
    Fan,
    FanError,
    check_regular,
    check_simplicial,
    check_terminal,
    divisor,
    divisor_polytope,
    fan_canonical_form,
    fans_isomorphic,
    hirzebruch,
    intersect_divisor_curve,
    picard_number,
    projective_plane,
    quadric_surface,
    star_subdivision,
    toric_canonical,
    toric_contract,
    toric_discrepancies,
    toric_mori_rays,
    wall_curves,
)


def cone2(*rays):
    return Cone.make(rays, 2)


class TestConePredicates:
    def test_regular_examples(self):
        assert check_regular(cone2((1, 0), (0, 1)))
        assert not check_regular(cone2((1, 0), (1, 2)))
        assert check_regular(cone2((1, 0), (-1, 1)))

    def test_regular_agrees_with_smith_normal_form(self):
        cases = [((1, 0), (0, 1)), ((1, 0), (1, 2)), ((1, 0), (-1, 1)), ((2, 1), (1, 1))]
        for rays in cases:
            expected = all(d == 1 for d in smith_diagonal(list(rays)))
            assert check_regular(cone2(*rays)) == expected

    def test_simplicial_examples(self):
        assert check_simplicial(cone2((1, 0), (0, 1)))
        square_base = Cone.make(
            [(1, 0, 1), (0, 1, 1), (-1, 0, 1), (0, -1, 1)], 3
        )
        assert not check_simplicial(square_base)
        assert check_simplicial(Cone.make([(1, 1)], 2))

    def test_strong_convexity_enforced(self):
        with pytest.raises(FanError, match="proportional"):
            Cone.make([(1, 0), (-1, 0)], 2)
        with pytest.raises(FanError, match="strongly convex"):
            Cone.make([(1, 0), (0, 1), (-1, -1)], 2)


class TestTerminal:
    def test_smooth_cone_is_terminal(self):
        report = check_terminal(cone2((1, 0), (0, 1)))
        assert report.is_terminal
        assert report.certificate is None

    def test_quotient_cone_a2_fails_with_certificate(self):
        report = check_terminal(cone2((1, 0), (-1, 2)))
        assert not report.is_terminal
        assert report.certificate == (0, 1)
        assert report.functional == (Fraction(1), Fraction(1))

    def test_quotient_cone_a3_fails_below_level_one(self):
        report = check_terminal(cone2((1, 0), (-1, 3)))
        assert not report.is_terminal
        assert report.certificate == (0, 1)

    def test_non_simplicial_is_rejected(self):
        square_base = Cone.make(
            [(1, 0, 1), (0, 1, 1), (-1, 0, 1), (0, -1, 1)], 3
        )
        with pytest.raises(FanError, match="m not unique"):
            check_terminal(square_base)

    def test_regular_implies_terminal(self):
        for rays in [((1, 0), (0, 1)), ((1, 0), (-1, 1)), ((2, 1), (1, 1))]:
            cone = cone2(*rays)
            if check_regular(cone):
                assert check_terminal(cone).is_terminal


class TestDiscrepancies:
    @pytest.mark.parametrize(
        "a, expected",
        [(2, Fraction(0)), (3, Fraction(-1, 3)), (1, Fraction(1))],
    )
    def test_cone_over_rational_normal_curve(self, a, expected):
        values = dict(toric_discrepancies(cone2((1, 0), (-1, a)), 3))
        assert values[(0, 1)] == expected

    def test_all_values_exceed_minus_one(self):
        for a in range(1, 7):
            for _, value in toric_discrepancies(cone2((1, 0), (-1, a)), 4):
                assert value > -1


class TestFanBasics:
    def test_projective_plane_is_complete_smooth(self):
        fan = projective_plane()
        assert fan.complete and fan.simplicial
        assert picard_number(fan) == 1

    def test_hirzebruch_picard_number(self):
        assert picard_number(hirzebruch(1)) == 2

    def test_two_point_blow_up_picard_number(self):
        fan = star_subdivision(projective_plane(), (1, 1))
        fan = star_subdivision(fan, (0, -1))
        assert len(fan.rays) == 5
        assert picard_number(fan) == 3

    def test_canonical_divisor(self):
        fan = projective_plane()
        assert toric_canonical(fan) == (-1, -1, -1)
        f1 = hirzebruch(1)
        assert toric_canonical(f1) == (-1, -1, -1, -1)
        assert len(toric_canonical(f1)) == len(f1.rays)

    def test_incomplete_fan_rejected_by_wall_ops(self):
        fan = Fan.make(2, [(1, 0), (0, 1)], [(0, 1)])
        assert not fan.complete
        with pytest.raises(FanError, match="complete"):
            wall_curves(fan)


class TestWallCurves:
    def test_p2_walls_all_proportional(self):
        curves = wall_curves(projective_plane())
        assert len(curves) == 3
        directions = {c.class_direction() for c in curves}
        assert len(directions) == 1
        k = toric_canonical(projective_plane())
        assert {intersect_divisor_curve(k, c) for c in curves} == {Fraction(-3)}

    def test_f2_wall_gives_minus_two_section(self):
        fan = hirzebruch(2)
        wall_index = fan.ray_index((0, 1))
        section = next(c for c in wall_curves(fan) if c.wall == (wall_index,))
        assert section.numbers[wall_index] == Fraction(-2)
        rel = section.relation
        assert rel[fan.ray_index((1, 0))] == 1
        assert rel[fan.ray_index((-1, 2))] == 1
        assert rel[wall_index] == -2

    def test_quadric_two_proportionality_classes(self):
        curves = wall_curves(quadric_surface())
        directions = {c.class_direction() for c in curves}
        assert len(directions) == 2

    def test_hirzebruch_fiber_meets_canonical_in_minus_two(self):
        for a in range(4):
            fan = hirzebruch(a)
            k = toric_canonical(fan)
            fiber_wall = fan.ray_index((1, 0))
            fiber = next(c for c in wall_curves(fan) if c.wall == (fiber_wall,))
            assert intersect_divisor_curve(k, fiber) == Fraction(-2)


class TestMoriRays:
    def test_p2_single_ray(self):
        assert len(toric_mori_rays(projective_plane())) == 1

    def test_f1_two_rays(self):
        rays = toric_mori_rays(hirzebruch(1))
        assert len(rays) == 2

    def test_quadric_two_rays(self):
        assert len(toric_mori_rays(quadric_surface())) == 2

    def test_f1_rays_are_fiber_and_section(self):
        fan = hirzebruch(1)
        k = toric_canonical(fan)
        values = sorted(r.pair(k) for r in toric_mori_rays(fan))
        assert values == [Fraction(-2), Fraction(-1)]


class TestContraction:
    def test_f1_contract_section_gives_p2(self):
        fan = hirzebruch(1)
        k = toric_canonical(fan)
        section = next(r for r in toric_mori_rays(fan) if r.pair(k) == -1)
        result = toric_contract(fan, section)
        assert result.kind == "divisorial"
        assert fans_isomorphic(result.fan, projective_plane())
        assert picard_number(result.fan) == picard_number(fan) - 1

    def test_f1_contract_fiber_gives_p1(self):
        fan = hirzebruch(1)
        k = toric_canonical(fan)
        fiber = next(r for r in toric_mori_rays(fan) if r.pair(k) == -2)
        result = toric_contract(fan, fiber)
        assert result.kind == "fibration"
        assert result.fan.rank == 1
        assert result.fan.complete

    def test_p2_contracts_to_point(self):
        fan = projective_plane()
        (ray,) = toric_mori_rays(fan)
        result = toric_contract(fan, ray)
        assert result.kind == "fibration"
        assert result.fan.rank == 0

    def test_non_extremal_ray_rejected(self):
        with pytest.raises(FanError, match="not an extremal ray"):
            toric_contract(hirzebruch(1), (9, 9, 9, 9))


class TestStarSubdivision:
    def test_blow_up_p2_gives_f1(self):
        blown = star_subdivision(projective_plane(), (1, 1))
        assert len(blown.rays) == 4
        assert fans_isomorphic(blown, hirzebruch(1))

    def test_resolves_quotient_cone(self):
        fan = Fan.make(
            2,
            [(1, 0), (-1, 2), (0, -1)],
            [(0, 1), (1, 2), (2, 0)],
        )
        resolved = star_subdivision(fan, (0, 1))
        for i in range(len(resolved.max_cones)):
            assert check_regular(resolved.cone(i))

    def test_existing_ray_is_identity(self):
        fan = projective_plane()
        assert star_subdivision(fan, (1, 0)) is fan

    def test_outside_support_rejected(self):
        fan = Fan.make(2, [(1, 0), (0, 1)], [(0, 1)])
        with pytest.raises(FanError, match="support"):
            star_subdivision(fan, (-1, -1))

    def test_subdivide_then_contract_round_trip(self):
        rng = random.Random(7)
        base_fans = [projective_plane(), hirzebruch(0), hirzebruch(1), hirzebruch(2)]
        done = 0
        while done < 20:
            fan = rng.choice(base_fans)
            cone_idx = rng.randrange(len(fan.max_cones))
            i, j = fan.max_cones[cone_idx]
            u, v = fan.rays[i], fan.rays[j]
            point = (u[0] + v[0], u[1] + v[1])
            blown = star_subdivision(fan, point)
            if len(blown.rays) != len(fan.rays) + 1:
                continue
            exceptional = [
                r
                for r in toric_mori_rays(blown)
                if any(blown.rays[w] == point for c in r.walls for w in c.wall)
            ]
            assert exceptional, "new ray must support a wall curve"
            result = toric_contract(blown, exceptional[0])
            assert result.kind == "divisorial"
            assert fans_isomorphic(result.fan, fan)
            done += 1


class TestDivisorPolytope:
    def test_hyperplane_class_on_p2(self):
        fan = projective_plane()
        h = divisor(fan, [1, 0, 0])
        pts = divisor_polytope(fan, h).lattice_points()
        assert len(pts) == 3

    def test_zero_divisor_single_point(self):
        fan = projective_plane()
        zero = divisor(fan, [0, 0, 0])
        assert divisor_polytope(fan, zero).lattice_points() == [(0, 0)]

    def test_negative_divisor_empty(self):
        fan = projective_plane()
        minus_h = divisor(fan, [-1, 0, 0])
        assert divisor_polytope(fan, minus_h).lattice_points() == []


def test_canonical_form_invariant_under_relabelling():
    fan = hirzebruch(1)
    shuffled = Fan.make(
        2,
        [(0, -1), (1, 0), (-1, 1), (0, 1)],
        [(1, 3), (3, 2), (2, 0), (0, 1)],
    )
    assert fan_canonical_form(fan) == fan_canonical_form(shuffled)
    assert not fans_isomorphic(hirzebruch(1), hirzebruch(2))

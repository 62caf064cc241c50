"""Toric varieties as fans: singularity tests, wall curves, Mori cone,
extremal contractions, star subdivisions, and divisor polytopes.

Rays are primitive integer vectors; a fan stores an ordered ray list plus
maximal cones as index tuples, mirroring the JSON wire format.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .linalg import (
    LatticeVector,
    RationalMatrix,
    NoSolutionError,
    UnderdeterminedError,
    as_fraction,
    determinant,
    dot,
    format_fraction,
    has_nontrivial_nonneg_relation,
    in_cone,
    integer_kernel_basis,
    lattice_index,
    matrix_rank,
    primitivize,
    rational_direction,
    solve_linear,
)
from .polytope import RationalPolytope

MAX_RANK = 4

ToricDivisor = tuple[Fraction, ...]


class FanError(ValueError):
    pass


def _validate_ray(v: Sequence[int], rank: int) -> LatticeVector:
    ray = tuple(int(x) for x in v)
    if len(ray) != rank:
        raise FanError(f"ray {ray} does not have rank {rank}")
    if all(x == 0 for x in ray):
        raise FanError("zero vector cannot be a ray")
    if primitivize(ray) != ray:
        raise FanError(f"ray {ray} is not primitive")
    return ray


@dataclass(frozen=True)
class Cone:
    """Strongly convex rational polyhedral cone spanned by primitive rays."""

    rays: tuple[LatticeVector, ...]
    rank: int

    @classmethod
    def make(cls, rays: Iterable[Sequence[int]], rank: int | None = None) -> "Cone":
        rays = tuple(tuple(int(x) for x in r) for r in rays)
        if rank is None:
            if not rays:
                raise FanError("cannot infer rank of the empty cone")
            rank = len(rays[0])
        if rank > MAX_RANK:
            raise FanError(f"ambient rank capped at {MAX_RANK}")
        rays = tuple(_validate_ray(r, rank) for r in rays)
        for a, b in itertools.combinations(rays, 2):
            if a == b or a == tuple(-x for x in b):
                raise FanError(f"rays {a} and {b} are proportional")
        if has_nontrivial_nonneg_relation(rays):
            raise FanError("cone is not strongly convex")
        return cls(rays, rank)

    def dim(self) -> int:
        return matrix_rank(self.rays)

    def is_simplicial(self) -> bool:
        return self.dim() == len(self.rays)

    def multiplicity(self) -> int:
        """Index of the sublattice spanned by the rays in its saturation."""
        return lattice_index(self.rays)

    def contains(self, v: Sequence) -> bool:
        vf = tuple(as_fraction(x) for x in v)
        if self.is_simplicial():
            coords = self.coordinates(vf)
            return coords is not None and all(c >= 0 for c in coords)
        return in_cone(self.rays, vf)

    def coordinates(self, v: Sequence) -> tuple[Fraction, ...] | None:
        """Coefficients of v in the ray basis (simplicial cones only)."""
        if not self.is_simplicial():
            raise FanError("coordinates need a simplicial cone")
        cols = RationalMatrix.from_rows(
            [[self.rays[j][i] for j in range(len(self.rays))] for i in range(self.rank)]
        )
        try:
            return solve_linear(cols, v)
        except NoSolutionError:
            return None
        except UnderdeterminedError:  # rays independent, so v outside the span
            return None


def check_simplicial(c: Cone) -> bool:
    """Rays linearly independent."""
    return c.is_simplicial()


def check_regular(c: Cone) -> bool:
    """Ray generators of every face extend to a lattice basis."""
    return c.is_simplicial() and c.multiplicity() == 1


@dataclass(frozen=True)
class TerminalReport:
    is_terminal: bool
    certificate: LatticeVector | None
    functional: tuple[Fraction, ...]

    def __bool__(self) -> bool:
        return self.is_terminal


def _support_functional(c: Cone) -> tuple[Fraction, ...]:
    """The unique m with m(P) = 1 on every primitive ray generator."""
    if not c.is_simplicial() or c.dim() != c.rank:
        raise FanError("m not unique; supply simplicial cone")
    mat = RationalMatrix.from_rows(c.rays)
    return solve_linear(mat, [1] * len(c.rays))


def _cone_membership_halfspaces(c: Cone) -> list[tuple[tuple[Fraction, ...], Fraction]]:
    """H-rep of a full-dimensional simplicial cone: ray coordinates >= 0."""
    n = len(c.rays)
    cols = RationalMatrix.from_rows(
        [[c.rays[j][i] for j in range(n)] for i in range(c.rank)]
    )
    rows = []
    for k in range(n):
        unit = [Fraction(int(j == k)) for j in range(n)]
        # row k of the inverse of the ray-column matrix
        coeff = solve_linear(
            RationalMatrix.from_rows(
                [[cols.entries[i][j] for i in range(c.rank)] for j in range(n)]
            ),
            unit,
        )
        rows.append((coeff, Fraction(0)))
    return rows


def check_terminal(c: Cone) -> TerminalReport:
    """Terminality test with a violating lattice point as certificate.

    Searches conv{0, P_1..P_d}; points at level m(v) > 1 are irrelevant by
    convexity.
    """
    m = _support_functional(c)
    halves = _cone_membership_halfspaces(c)
    halves.append((tuple(-x for x in m), Fraction(-1)))  # m(v) <= 1
    poly = RationalPolytope.from_inequalities(c.rank, halves)
    generators = set(c.rays)
    for point in poly.lattice_points():
        if all(x == 0 for x in point) or point in generators:
            continue
        return TerminalReport(False, point, m)
    return TerminalReport(True, None, m)


def toric_discrepancies(
    c: Cone, height_bound: int
) -> list[tuple[LatticeVector, Fraction]]:
    """Discrepancy m(v) - 1 for every primitive v in the cone within the box
    [-h, h]^d, excluding the ray generators.

    All values exceed -1: m is strictly positive on the cone minus the origin.
    """
    m = _support_functional(c)
    halves = _cone_membership_halfspaces(c)
    for i in range(c.rank):
        unit = tuple(Fraction(int(j == i)) for j in range(c.rank))
        halves.append((unit, Fraction(-height_bound)))
        halves.append((tuple(-x for x in unit), Fraction(-height_bound)))
    poly = RationalPolytope.from_inequalities(c.rank, halves)
    out = []
    generators = set(c.rays)
    for point in poly.lattice_points():
        if all(x == 0 for x in point) or point in generators:
            continue
        if primitivize(point) != point:
            continue
        value = dot(m, point) - 1
        assert value > -1
        out.append((point, value))
    return out


@dataclass(frozen=True)
class Fan:
    """Finite fan given by an ordered ray list and maximal cones as index
    tuples. `complete` is validated by wall double-counting when the fan is
    simplicial."""

    rank: int
    rays: tuple[LatticeVector, ...]
    max_cones: tuple[tuple[int, ...], ...]
    complete: bool = field(default=False)
    simplicial: bool = field(default=False)

    @classmethod
    def make(
        cls,
        rank: int,
        rays: Iterable[Sequence[int]],
        max_cones: Iterable[Sequence[int]],
        check: bool = True,
    ) -> "Fan":
        if rank > MAX_RANK:
            raise FanError(f"ambient rank capped at {MAX_RANK}")
        if rank == 0:
            return cls(0, (), ((),), complete=True, simplicial=True)
        rays = tuple(_validate_ray(r, rank) for r in rays)
        if len(set(rays)) != len(rays):
            raise FanError("duplicate rays")
        cones = tuple(tuple(sorted(set(int(i) for i in c))) for c in max_cones)
        for cone in cones:
            if not cone:
                raise FanError("empty maximal cone in positive rank")
            if max(cone) >= len(rays):
                raise FanError("cone references unknown ray")
        used = set(itertools.chain.from_iterable(cones))
        if used != set(range(len(rays))):
            raise FanError("every ray must belong to some maximal cone")
        simplicial = True
        if check:
            for cone in cones:
                geom = Cone.make([rays[i] for i in cone], rank)
                if not geom.is_simplicial():
                    simplicial = False
        complete = cls._complete_by_wall_count(rank, cones) if simplicial else False
        return cls(rank, rays, cones, complete=complete, simplicial=simplicial)

    @staticmethod
    def _complete_by_wall_count(rank: int, cones: Sequence[tuple[int, ...]]) -> bool:
        counts: dict[frozenset, int] = {}
        for cone in cones:
            if len(cone) != rank:
                return False
            for wall in itertools.combinations(cone, rank - 1):
                counts[frozenset(wall)] = counts.get(frozenset(wall), 0) + 1
        return bool(counts) and all(v == 2 for v in counts.values())

    def cone(self, index: int) -> Cone:
        return Cone.make([self.rays[i] for i in self.max_cones[index]], self.rank)

    def cones(self) -> list[Cone]:
        return [self.cone(i) for i in range(len(self.max_cones))]

    def ray_index(self, ray: Sequence[int]) -> int:
        return self.rays.index(tuple(int(x) for x in ray))


def picard_number(f: Fan) -> int:
    """#rays - rank, valid for complete simplicial fans."""
    _require_complete_simplicial(f)
    return len(f.rays) - f.rank


def _require_complete_simplicial(f: Fan) -> None:
    if not f.complete:
        raise FanError("operation requires a complete fan")
    if not f.simplicial:
        raise FanError("operation requires a simplicial fan")


def toric_canonical(f: Fan) -> ToricDivisor:
    """The canonical class: coefficient -1 on every ray divisor."""
    return tuple(Fraction(-1) for _ in f.rays)


def divisor(f: Fan, coeffs: Iterable) -> ToricDivisor:
    values = tuple(as_fraction(x) for x in coeffs)
    if len(values) != len(f.rays):
        raise FanError("divisor needs one coefficient per ray")
    return values


def divisor_polytope(f: Fan, d: ToricDivisor) -> RationalPolytope:
    """P_D = {u : <u, ray> >= -coefficient}, in the dual lattice."""
    halves = [
        (tuple(Fraction(x) for x in ray), -as_fraction(a))
        for ray, a in zip(f.rays, d)
    ]
    return RationalPolytope.from_inequalities(f.rank, halves)


@dataclass(frozen=True)
class WallCurve:
    """Curve attached to a (d-1)-dimensional wall of a complete simplicial
    fan. `relation` is the primitive integer wall relation (indexed by fan
    rays, zero off the two adjacent cones); `numbers` holds the exact
    intersection numbers with each ray divisor."""

    wall: tuple[int, ...]
    opposite: tuple[int, int]
    relation: tuple[int, ...]
    numbers: tuple[Fraction, ...]

    def class_direction(self) -> LatticeVector:
        return rational_direction(self.numbers)


def wall_curves(f: Fan) -> list[WallCurve]:
    _require_complete_simplicial(f)
    if f.rank == 0:
        return []
    adjacency: dict[tuple[int, ...], list[int]] = {}
    for ci, cone in enumerate(f.max_cones):
        for wall in itertools.combinations(cone, f.rank - 1):
            adjacency.setdefault(tuple(sorted(wall)), []).append(ci)
    curves = []
    for wall, cone_ids in sorted(adjacency.items()):
        if len(cone_ids) != 2:
            raise FanError("fan is not complete: dangling wall")
        ca, cb = cone_ids
        u = next(i for i in f.max_cones[ca] if i not in wall)
        v = next(i for i in f.max_cones[cb] if i not in wall)
        curves.append(_wall_curve(f, wall, (u, v), (ca, cb)))
    return curves


def _wall_curve(
    f: Fan, wall: tuple[int, ...], opposite: tuple[int, int], cone_ids: tuple[int, int]
) -> WallCurve:
    participants = list(wall) + [opposite[0], opposite[1]]
    ray_matrix = [[f.rays[i][k] for i in participants] for k in range(f.rank)]
    kernel = integer_kernel_basis(ray_matrix)
    if len(kernel) != 1:
        raise FanError("wall relation is not unique")
    rel = list(kernel[0])
    if rel[-1] < 0 or rel[-2] < 0:
        rel = [-x for x in rel]
    if rel[-1] <= 0 or rel[-2] <= 0:
        raise FanError("wall relation has non-positive opposite coefficients")
    relation = [0] * len(f.rays)
    for idx, coeff in zip(participants, rel):
        relation[idx] = coeff

    # Intersection numbers: opposite rays from multiplicity ratios, wall rays
    # by pairing with a basis of linear functionals (linear equivalence).
    wall_mult = lattice_index([f.rays[i] for i in wall]) if wall else 1
    numbers = [Fraction(0)] * len(f.rays)
    for opp, cone_id in zip(opposite, cone_ids):
        numbers[opp] = Fraction(wall_mult, f.cone(cone_id).multiplicity())
    if wall:
        rows = []
        rhs = []
        for k in range(f.rank):
            rows.append([f.rays[i][k] for i in wall])
            known = sum(
                (Fraction(f.rays[opp][k]) * numbers[opp] for opp in opposite),
                Fraction(0),
            )
            rhs.append(-known)
        solution = solve_linear(RationalMatrix.from_rows(rows), rhs)
        for i, value in zip(wall, solution):
            numbers[i] = value
    return WallCurve(wall, opposite, tuple(relation), tuple(numbers))


def intersect_divisor_curve(d: ToricDivisor, c: WallCurve) -> Fraction:
    return dot(d, c.numbers)


@dataclass(frozen=True)
class ExtremalRay:
    """Extremal ray of the Mori cone with its supporting wall curves."""

    direction: LatticeVector  # primitive direction of (D_rho . C) vectors
    walls: tuple[WallCurve, ...]

    def pair(self, d: ToricDivisor) -> Fraction:
        """Intersection of a divisor with the smallest wall curve on the ray."""
        return intersect_divisor_curve(d, self.walls[0])


def toric_mori_rays(f: Fan) -> list[ExtremalRay]:
    """Extreme rays of the cone spanned by the wall-curve classes."""
    curves = wall_curves(f)
    groups: dict[LatticeVector, list[WallCurve]] = {}
    for curve in curves:
        groups.setdefault(curve.class_direction(), []).append(curve)
    directions = sorted(groups)
    rays = []
    for direction in directions:
        others = [d for d in directions if d != direction]
        if others and in_cone(others, direction):
            continue
        walls = tuple(sorted(groups[direction], key=lambda c: c.wall))
        rays.append(ExtremalRay(direction, walls))
    return rays


@dataclass(frozen=True)
class ToricContraction:
    fan: Fan
    kind: str  # "divisorial" | "small" | "fibration"
    removed_ray: LatticeVector
    dropped_fan_rays: tuple[LatticeVector, ...] = ()


def toric_contract(f: Fan, ray: ExtremalRay | Sequence[int]) -> ToricContraction:
    """Contract an extremal ray by removing its walls and merging cones.

    Fibration: merged support contains a line, quotient fan returned.
    Divisorial: ray count drops. Small: rays unchanged, merged cones are no
    longer simplicial; the fan is returned read-only (no flips here).
    """
    _require_complete_simplicial(f)
    rays_available = {r.direction: r for r in toric_mori_rays(f)}
    direction = ray.direction if isinstance(ray, ExtremalRay) else tuple(int(x) for x in ray)
    if direction not in rays_available:
        raise FanError(f"{direction} is not an extremal ray of this fan")
    chosen = rays_available[direction]

    removed_walls = {tuple(c.wall) for c in chosen.walls}
    parent = list(range(len(f.max_cones)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for curve in chosen.walls:
        adjacency = [
            ci
            for ci, cone in enumerate(f.max_cones)
            if set(curve.wall) <= set(cone)
        ]
        a, b = adjacency
        parent[find(a)] = find(b)

    groups: dict[int, set[int]] = {}
    for ci in range(len(f.max_cones)):
        groups.setdefault(find(ci), set()).update(f.max_cones[ci])

    merged = [sorted(idxs) for _, idxs in sorted(groups.items())]
    merged_rays = [[f.rays[i] for i in idxs] for idxs in merged]

    line_generators: list[LatticeVector] = []
    for rays in merged_rays:
        if len(rays) > f.rank or has_nontrivial_nonneg_relation(rays):
            for r in rays:
                if in_cone(rays, tuple(-x for x in r)):
                    line_generators.append(r)
    if line_generators:
        return _fibration_quotient(f, direction, merged_rays, line_generators)

    # Birational case: reduce each merged cone to its extreme rays.
    new_cones_rays: list[list[LatticeVector]] = []
    for rays in merged_rays:
        extreme = [
            r
            for r in rays
            if not in_cone([s for s in rays if s != r], r)
        ]
        new_cones_rays.append(extreme)
    surviving = sorted(set(itertools.chain.from_iterable(new_cones_rays)))
    index = {r: i for i, r in enumerate(surviving)}
    cones_idx = [tuple(sorted(index[r] for r in rays)) for rays in new_cones_rays]

    if len(surviving) < len(f.rays):
        kind = "divisorial"
        new_fan = Fan.make(f.rank, surviving, cones_idx)
        if not new_fan.complete:
            raise FanError("contraction produced a non-complete fan")
    elif any(len(c) > f.rank for c in cones_idx):
        kind = "small"
        new_fan = Fan.make(f.rank, surviving, cones_idx, check=False)
        new_fan = Fan(
            f.rank,
            new_fan.rays,
            new_fan.max_cones,
            complete=f.complete,
            simplicial=False,
        )
    else:
        raise FanError("contraction changed nothing; diagnostic: ray not contractible")
    dropped = tuple(r for r in f.rays if r not in set(surviving))
    return ToricContraction(new_fan, kind, direction, dropped)


def _fibration_quotient(
    f: Fan,
    direction: LatticeVector,
    merged_rays: list[list[LatticeVector]],
    line_generators: list[LatticeVector],
) -> ToricContraction:
    projection = integer_kernel_basis(line_generators)
    new_rank = len(projection)
    if new_rank == 0:
        return ToricContraction(Fan.make(0, [], [[]]), "fibration", direction, f.rays)

    def project(ray: LatticeVector) -> LatticeVector | None:
        image = tuple(sum(p[k] * ray[k] for k in range(f.rank)) for p in projection)
        if all(x == 0 for x in image):
            return None
        return primitivize(image)

    cone_ray_sets: list[list[LatticeVector]] = []
    for rays in merged_rays:
        image_rays = sorted({p for p in (project(r) for r in rays) if p is not None})
        extreme = [
            r for r in image_rays if not in_cone([s for s in image_rays if s != r], r)
        ]
        if extreme:
            cone_ray_sets.append(extreme)
    new_rays = sorted(set(itertools.chain.from_iterable(cone_ray_sets)))
    index = {r: i for i, r in enumerate(new_rays)}
    cones_idx = sorted({tuple(sorted(index[r] for r in rays)) for rays in cone_ray_sets})
    new_fan = Fan.make(new_rank, new_rays, cones_idx)
    if not new_fan.complete:
        raise FanError("fibration quotient is not a complete fan")
    return ToricContraction(new_fan, "fibration", direction, f.rays)


def star_subdivision(f: Fan, v: Sequence[int]) -> Fan:
    """Replace every cone containing v by joins of v with the facets not
    containing it. Subdividing at an existing ray is the identity."""
    vertex = tuple(int(x) for x in v)
    if primitivize(vertex) != vertex:
        raise FanError("subdivision point must be primitive")
    containing = [
        ci for ci in range(len(f.max_cones)) if f.cone(ci).contains(vertex)
    ]
    if not containing:
        raise FanError("vector lies outside the support of the fan")
    if vertex in f.rays:
        return f
    new_rays = list(f.rays) + [vertex]
    v_index = len(f.rays)
    new_cones: list[tuple[int, ...]] = []
    for ci, cone in enumerate(f.max_cones):
        if ci not in containing:
            new_cones.append(cone)
            continue
        geom = f.cone(ci)
        if not geom.is_simplicial():
            raise FanError("star subdivision implemented for simplicial cones")
        for skip in cone:
            facet_rays = [f.rays[i] for i in cone if i != skip]
            facet = Cone.make(facet_rays, f.rank) if facet_rays else None
            if facet is not None and facet.dim() == f.rank - 1:
                facet_poly_contains = _cone_contains_lower(facet, vertex)
            else:
                facet_poly_contains = False
            if facet_poly_contains:
                continue
            new_cones.append(tuple(sorted([i for i in cone if i != skip] + [v_index])))
    return Fan.make(f.rank, new_rays, new_cones)


def _cone_contains_lower(c: Cone, v: LatticeVector) -> bool:
    """Membership of v in a lower-dimensional simplicial cone."""
    coords = None
    try:
        cols = RationalMatrix.from_rows(
            [[c.rays[j][i] for j in range(len(c.rays))] for i in range(c.rank)]
        )
        coords = solve_linear(cols, v)
    except (NoSolutionError, UnderdeterminedError):
        return False
    return all(x >= 0 for x in coords)


def fan_canonical_form(f: Fan) -> tuple:
    """Canonical representative of the fan up to GL(d, Z).

    Tries every ordered unimodular ray tuple as a new lattice basis and keeps
    the lexicographically smallest (rays, cones) presentation. Falls back to
    the identity presentation when no ray tuple is unimodular.
    """
    if f.rank == 0:
        return ((), ((),))
    candidates = [_presentation(f.rays, f.max_cones)]
    for combo in itertools.permutations(range(len(f.rays)), f.rank):
        # Columns of `basis` are the chosen rays; its inverse maps them to
        # the standard basis.
        basis = [[f.rays[i][k] for i in combo] for k in range(f.rank)]
        det = determinant(RationalMatrix.from_rows(basis))
        if abs(det) != 1:
            continue
        transform = _int_inverse(basis)
        mapped = [
            tuple(
                sum(transform[r][k] * ray[k] for k in range(f.rank))
                for r in range(f.rank)
            )
            for ray in f.rays
        ]
        candidates.append(_presentation(tuple(mapped), f.max_cones))
    return min(candidates)


def _presentation(rays: Sequence[LatticeVector], cones: Sequence[tuple[int, ...]]) -> tuple:
    order = sorted(range(len(rays)), key=lambda i: rays[i])
    relabel = {old: new for new, old in enumerate(order)}
    sorted_rays = tuple(rays[i] for i in order)
    sorted_cones = tuple(sorted(tuple(sorted(relabel[i] for i in c)) for c in cones))
    return (sorted_rays, sorted_cones)


def _int_inverse(mat: Sequence[Sequence[int]]) -> list[list[int]]:
    """Exact inverse (as rows) of a unimodular integer matrix."""
    n = len(mat)
    rows = RationalMatrix.from_rows(mat)
    inverse_cols = []
    for k in range(n):
        unit = [Fraction(int(i == k)) for i in range(n)]
        inverse_cols.append(solve_linear(rows, unit))
    return [[int(inverse_cols[j][i]) for j in range(n)] for i in range(n)]


def fans_isomorphic(f1: Fan, f2: Fan) -> bool:
    return fan_canonical_form(f1) == fan_canonical_form(f2)


# Standard fans used across fixtures and tests.

def projective_plane() -> Fan:
    return Fan.make(2, [(1, 0), (0, 1), (-1, -1)], [(0, 1), (1, 2), (2, 0)])


def hirzebruch(a: int) -> Fan:
    """F_a = P(O + O(a)) over P^1; a = 0 gives P^1 x P^1, a = 1 the blow-up
    of the plane at a point."""
    if a < 0:
        raise FanError("twist must be non-negative")
    return Fan.make(
        2,
        [(1, 0), (0, 1), (-1, a), (0, -1)],
        [(0, 1), (1, 2), (2, 3), (3, 0)],
    )


def quadric_surface() -> Fan:
    return hirzebruch(0)


def fan_to_json(f: Fan) -> dict:
    return {
        "rank": f.rank,
        "rays": [list(r) for r in f.rays],
        "max_cones": [list(c) for c in f.max_cones],
    }


def fan_from_json(data: dict) -> Fan:
    return Fan.make(data["rank"], data["rays"], data["max_cones"])


def divisor_to_json(d: ToricDivisor) -> list[str]:
    return [format_fraction(x) for x in d]


def divisor_from_json(f: Fan, data: Sequence) -> ToricDivisor:
    return divisor(f, data)

"""Rational surfaces as Picard lattices: blow-ups, adjunction, Castelnuovo
contractions, (-1)-class enumeration, and Kleiman-style nef/ample tests.

Point configurations are modelled purely numerically: the lattice plus a list
of classes declared effective. No coordinates anywhere.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .linalg import (
    RationalMatrix,
    as_fraction,
    format_fraction,
    integer_kernel_basis,
    rational_direction,
)


class SurfaceError(ValueError):
    pass


@dataclass(frozen=True)
class CurveClass:
    """A divisor class with its arithmetic genus and bookkeeping flags."""

    coords: tuple[Fraction, ...]
    pa: Fraction
    flags: tuple[str, ...] = ()

    def with_flag(self, flag: str) -> "CurveClass":
        if flag in self.flags:
            return self
        return replace(self, flags=tuple(sorted(self.flags + (flag,))))


@dataclass(frozen=True)
class SurfaceModel:
    """Finite-rank intersection lattice with canonical class and a certified
    list of effective curve classes (the Mori cone generators when
    `ne_certified` is set)."""

    basis: tuple[str, ...]
    gram: RationalMatrix
    canonical: tuple[Fraction, ...]
    curves: tuple[CurveClass, ...] = ()
    ne_certified: bool = False
    boundary: tuple[Fraction, ...] = ()  # coefficient per stored curve

    def __post_init__(self):
        if not self.gram.is_symmetric():
            raise SurfaceError("intersection matrix must be symmetric")
        if self.gram.rows != len(self.basis):
            raise SurfaceError("basis size does not match the intersection matrix")
        if len(self.canonical) != len(self.basis):
            raise SurfaceError("canonical class has wrong length")
        if self.boundary and len(self.boundary) != len(self.curves):
            raise SurfaceError("boundary needs one coefficient per stored curve")
        for b in self.boundary:
            if b < 0 or b > 1:
                raise SurfaceError("boundary coefficients live in [0, 1]")

    @property
    def rank(self) -> int:
        return len(self.basis)

    def dot(self, a: Sequence, b: Sequence) -> Fraction:
        row = self.gram.mul_vector([as_fraction(x) for x in b])
        return sum(
            (as_fraction(x) * y for x, y in zip(a, row)), Fraction(0)
        )

    def k_dot(self, c: Sequence) -> Fraction:
        return self.dot(self.canonical, c)

    def self_intersection(self, c: Sequence) -> Fraction:
        return self.dot(c, c)

    def curve(self, coords: Sequence, flags: Iterable[str] = ()) -> CurveClass:
        tup = tuple(as_fraction(x) for x in coords)
        return CurveClass(tup, arithmetic_genus(self, tup), tuple(sorted(flags)))

    def boundary_coefficient(self, index: int) -> Fraction:
        if not self.boundary:
            return Fraction(0)
        return self.boundary[index]

    def with_boundary(self, coefficients: Sequence) -> "SurfaceModel":
        return replace(self, boundary=tuple(as_fraction(x) for x in coefficients))

    def k_plus_b_dot(self, c: Sequence) -> Fraction:
        value = self.k_dot(c)
        for coeff, curve in zip(self.boundary, self.curves):
            if coeff:
                value += coeff * self.dot(curve.coords, c)
        return value


def arithmetic_genus(m: SurfaceModel, c: Sequence) -> Fraction:
    """Adjunction: p_a = 1 + ((K + C) . C) / 2, exact."""
    c = tuple(as_fraction(x) for x in c)
    return 1 + (m.k_dot(c) + m.dot(c, c)) / 2


def projective_plane_model() -> SurfaceModel:
    gram = RationalMatrix.from_rows([[1]])
    model = SurfaceModel(("H",), gram, (Fraction(-3),), ne_certified=True)
    line = model.curve((1,))
    return replace(model, curves=(line,))


def blown_up_plane(k: int) -> SurfaceModel:
    """The plane blown up at k general points, with the standard basis
    H, E1..Ek and the (-1)-classes certified as Mori cone generators.

    For k = 1 the ruling H - E1 is appended: the exceptional curve alone does
    not generate the cone there.
    """
    if k < 0 or k > 9:
        raise SurfaceError("supported for at most nine points")
    model = projective_plane_model()
    for _ in range(k):
        model = blow_up(model, [])
    classes = enumerate_minus_one_classes(k, degree_bound=7) if k else []
    curves = [model.curve(c) for c in classes]
    if k == 0:
        curves = [model.curve((1,))]
    if k == 1:
        curves.append(model.curve((1, -1)))
    return replace(model, curves=tuple(curves), ne_certified=True)


def blow_up(
    m: SurfaceModel, center: Sequence[tuple[CurveClass, int]] = ()
) -> SurfaceModel:
    """Blow up a point: extend the basis by E, set K' = K + E, and transform
    each listed curve C to C - mult * E. Curves not listed pass through the
    blown-up point with multiplicity zero."""
    for _, mult in center:
        if mult < 0:
            raise SurfaceError("multiplicity must be a non-negative integer")
    n = m.rank
    label = _fresh_exceptional_label(m.basis)
    rows = [list(row) + [Fraction(0)] for row in m.gram.entries]
    rows.append([Fraction(0)] * n + [Fraction(-1)])
    gram = RationalMatrix(tuple(tuple(r) for r in rows))
    canonical = m.canonical + (Fraction(1),)
    mult_of = {
        tuple(as_fraction(x) for x in curve.coords): mult for curve, mult in center
    }
    new_model = SurfaceModel(m.basis + (label,), gram, canonical)
    curves = []
    for curve in m.curves:
        mult = mult_of.pop(curve.coords, 0)
        coords = curve.coords + (Fraction(-mult),)
        curves.append(
            CurveClass(coords, arithmetic_genus(new_model, coords), curve.flags)
        )
    for center_coords, mult in mult_of.items():  # listed but not yet stored
        coords = center_coords + (Fraction(-mult),)
        curves.append(CurveClass(coords, arithmetic_genus(new_model, coords)))
    exceptional = new_model.curve(
        (0,) * n + (1,), flags=("exceptional-of-last-blow-up",)
    )
    curves.append(exceptional)
    boundary = m.boundary + ((Fraction(0),) if m.boundary else ())
    return replace(
        new_model,
        curves=tuple(curves),
        ne_certified=False,
        boundary=boundary if m.boundary else (),
    )


def _fresh_exceptional_label(basis: Sequence[str]) -> str:
    used = set(basis)
    i = 1
    while f"E{i}" in used:
        i += 1
    return f"E{i}"


def is_minus_one_curve(m: SurfaceModel, c: CurveClass) -> bool:
    return (
        m.self_intersection(c.coords) == -1
        and m.k_dot(c.coords) == -1
        and c.pa == 0
    )


def find_minus_one_curves(m: SurfaceModel) -> list[CurveClass]:
    return [c for c in m.curves if is_minus_one_curve(m, c)]


def castelnuovo_contract(m: SurfaceModel, e: CurveClass) -> SurfaceModel:
    """Contract a (-1)-curve: push every class through D -> D + (D.E)E and
    restrict the lattice to the orthogonal complement of E."""
    if not is_minus_one_curve(m, e):
        raise SurfaceError("Castelnuovo requires a -1-curve")

    def project(d: Sequence) -> tuple[Fraction, ...]:
        factor = m.dot(d, e.coords)
        return tuple(
            as_fraction(x) + factor * y for x, y in zip(d, e.coords)
        )

    # Integral basis of the orthogonal complement of E, ordered and signed
    # to follow the original basis where possible.
    pairing_row = [m.dot(_unit(m.rank, i), e.coords) for i in range(m.rank)]
    denom = 1
    for value in pairing_row:
        denom = denom * value.denominator // _gcd(denom, value.denominator)
    int_row = [int(value * denom) for value in pairing_row]
    kernel = integer_kernel_basis([int_row])
    if len(kernel) != m.rank - 1:
        raise SurfaceError("contraction did not drop the rank by one")
    oriented = []
    for vec in kernel:
        lead = next(i for i, x in enumerate(vec) if x != 0)
        oriented.append(tuple(-x for x in vec) if vec[lead] < 0 else vec)
    kernel = sorted(
        oriented, key=lambda v: next(i for i, x in enumerate(v) if x != 0)
    )

    new_basis = _labels_for_contraction(m, e, kernel)
    basis_matrix = [list(v) for v in kernel]  # rows are new basis vectors
    gram = RationalMatrix.from_rows(
        [
            [m.dot(basis_matrix[i], basis_matrix[j]) for j in range(len(kernel))]
            for i in range(len(kernel))
        ]
    )
    k_new = _coords_in(kernel, project(m.canonical))
    result = SurfaceModel(new_basis, gram, k_new)
    curves = []
    boundary = []
    for idx, curve in enumerate(m.curves):
        image = project(curve.coords)
        if all(x == 0 for x in image):
            continue
        coords = _coords_in(kernel, image)
        flags = tuple(f for f in curve.flags if f != "exceptional-of-last-blow-up")
        curves.append(CurveClass(coords, arithmetic_genus(result, coords), flags))
        if m.boundary:
            boundary.append(m.boundary[idx])
    unique_curves = []
    unique_boundary = []
    seen = set()
    for i, curve in enumerate(curves):
        if curve.coords in seen:
            continue
        seen.add(curve.coords)
        unique_curves.append(curve)
        if m.boundary:
            unique_boundary.append(boundary[i])
    return replace(
        result,
        curves=tuple(unique_curves),
        ne_certified=m.ne_certified,
        boundary=tuple(unique_boundary) if m.boundary else (),
    )


def _unit(n: int, i: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(int(j == i)) for j in range(n))


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def _labels_for_contraction(
    m: SurfaceModel, e: CurveClass, kernel: Sequence[tuple[int, ...]]
) -> tuple[str, ...]:
    # Keep old labels when the new basis vectors are old basis vectors.
    labels = []
    for i, vec in enumerate(kernel):
        ones = [j for j, x in enumerate(vec) if x != 0]
        if len(ones) == 1 and vec[ones[0]] == 1:
            labels.append(m.basis[ones[0]])
        else:
            labels.append(f"v{i}")
    if len(set(labels)) != len(labels):
        labels = [f"v{i}" for i in range(len(kernel))]
    return tuple(labels)


def _coords_in(
    basis_rows: Sequence[tuple[int, ...]], vector: Sequence[Fraction]
) -> tuple[Fraction, ...]:
    from .linalg import solve_linear

    cols = RationalMatrix.from_rows(
        [[Fraction(basis_rows[j][i]) for j in range(len(basis_rows))] for i in range(len(vector))]
    )
    return solve_linear(cols, vector)


def enumerate_minus_one_classes(k: int, degree_bound: int) -> list[tuple[int, ...]]:
    """All classes dH - sum(m_i E_i) with D^2 = K.D = -1 on the blow-up of
    the plane at k general points, for 0 <= d <= degree_bound.

    d = 0 contributes the exceptional classes themselves; d >= 1 solutions
    have non-negative multiplicities (enumerated up to permutation, then
    expanded).
    """
    if k > 9:
        raise SurfaceError("unsupported beyond nine points")
    if degree_bound < 1:
        raise SurfaceError("degree bound must be positive")
    found: list[tuple[int, ...]] = []
    for i in range(k):
        coords = [0] * (k + 1)
        coords[1 + i] = 1
        found.append(tuple(coords))
    for d in range(1, degree_bound + 1):
        target_sum = 3 * d - 1
        target_sq = d * d + 1
        for multiset in _bounded_multisets(k, d, target_sum, target_sq):
            for perm in sorted(set(itertools.permutations(multiset))):
                found.append((d,) + tuple(-m for m in perm))
    return sorted(found)


def _bounded_multisets(slots: int, max_value: int, total: int, total_sq: int):
    """Non-increasing tuples of `slots` integers in [0, max_value] with the
    given sum and sum of squares."""

    def rec(prefix: list[int], remaining: int, rem_sum: int, rem_sq: int, cap: int):
        if remaining == 0:
            if rem_sum == 0 and rem_sq == 0:
                yield tuple(prefix)
            return
        top = min(cap, rem_sum)
        for value in range(top, -1, -1):
            if value * value > rem_sq:
                continue
            if value * remaining < rem_sum:
                break
            prefix.append(value)
            yield from rec(prefix, remaining - 1, rem_sum - value, rem_sq - value * value, value)
            prefix.pop()

    yield from rec([], slots, total, total_sq, max_value)


def extremal_ray_test(m: SurfaceModel, c: CurveClass) -> str:
    """'extremal' when C^2 < 0; 'not-extremal-unless-rho1' when C^2 > 0 and
    rho > 1; 'inconclusive' when C^2 = 0 (the criterion is silent there)."""
    square = m.self_intersection(c.coords)
    if square < 0:
        return "extremal"
    if square > 0:
        return "not-extremal-unless-rho1" if m.rank > 1 else "extremal"
    return "inconclusive"


@dataclass(frozen=True)
class NefVerdict:
    verdict: str  # "ample" | "nef-not-ample" | "not-nef"
    witness: CurveClass | None = None


def nef_ample_check(m: SurfaceModel, d: Sequence) -> NefVerdict:
    """Kleiman-style test against the certified generator list."""
    if not m.ne_certified:
        raise SurfaceError("curve list not certified as generating")
    d = tuple(as_fraction(x) for x in d)
    strictly_positive = True
    for curve in m.curves:
        value = m.dot(d, curve.coords)
        if value < 0:
            return NefVerdict("not-nef", curve)
        if value == 0:
            strictly_positive = False
    return NefVerdict("ample" if strictly_positive else "nef-not-ample")


def model_to_json(m: SurfaceModel) -> dict:
    return {
        "basis": list(m.basis),
        "gram": [[format_fraction(x) for x in row] for row in m.gram.entries],
        "K": [format_fraction(x) for x in m.canonical],
        "curves": [
            {
                "coords": [format_fraction(x) for x in c.coords],
                "pa": format_fraction(c.pa),
                "flags": list(c.flags),
            }
            for c in m.curves
        ],
        "ne_certified": m.ne_certified,
        "boundary": [format_fraction(x) for x in m.boundary],
    }


def model_from_json(data: dict) -> SurfaceModel:
    gram = RationalMatrix.from_rows(data["gram"])
    curves = tuple(
        CurveClass(
            tuple(as_fraction(x) for x in c["coords"]),
            as_fraction(c["pa"]),
            tuple(c.get("flags", [])),
        )
        for c in data.get("curves", [])
    )
    model = SurfaceModel(
        tuple(data["basis"]),
        gram,
        tuple(as_fraction(x) for x in data["K"]),
        curves=curves,
        ne_certified=bool(data.get("ne_certified", False)),
        boundary=tuple(as_fraction(x) for x in data.get("boundary", [])),
    )
    for curve in model.curves:
        if arithmetic_genus(model, curve.coords) != curve.pa:
            raise SurfaceError(
                f"stored genus violates adjunction for {curve.coords}"
            )
    return model

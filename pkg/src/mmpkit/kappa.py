"""Section counting and Kodaira dimension on the toric backend, closed-form
curve and hypersurface rules, bigness, and section-ring truncation probes.

kappa = -infinity is represented by value None throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import floor, gcd
from typing import Sequence

from .polytope import RationalPolytope
from .toric import Fan, FanError, ToricDivisor, divisor_polytope, wall_curves
from .linalg import as_fraction, dot

DEFAULT_SAMPLES = 8
EPSILON_DENOMINATOR_BOUND = 2**10


def plane_curve_genus(d: int) -> int:
    """Genus of a smooth plane curve of degree d: (d-1)(d-2)/2."""
    if d <= 0:
        raise ValueError("degree must be positive")
    return (d - 1) * (d - 2) // 2


def hypersurface_canonical_degree(n: int, d: int) -> int:
    """Degree of the canonical class of a degree-d hypersurface in P^n."""
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    return d - n - 1


def kappa_curve(deg, torsion: bool = False) -> int | None:
    """Kodaira dimension of a divisor on a curve from its degree.

    None encodes -infinity; the torsion flag only matters at degree zero.
    """
    degree = as_fraction(deg)
    if degree > 0:
        return 1
    if degree < 0:
        return None
    return 0 if torsion else None


def floor_divisor(d: ToricDivisor) -> ToricDivisor:
    return tuple(Fraction(floor(x)) for x in d)


def scale_divisor(d: ToricDivisor, m) -> ToricDivisor:
    f = as_fraction(m)
    return tuple(f * x for x in d)


def section_count(f: Fan, d: ToricDivisor, m: int = 1) -> int:
    """h^0 of the rounded-down multiple: lattice points of P_{floor(mD)}."""
    if not f.complete:
        raise FanError("section counting requires a complete fan")
    rounded = floor_divisor(scale_divisor(d, m))
    return len(divisor_polytope(f, rounded).lattice_points())


def is_nef_divisor(f: Fan, d: ToricDivisor) -> bool:
    return all(dot(d, c.numbers) >= 0 for c in wall_curves(f))


@dataclass(frozen=True)
class KodairaReport:
    value: int | None  # None = -infinity
    growth_degree: int | None
    polytope_dimension: int | None
    route_b_skipped: bool
    undetermined: bool = False
    sample_stride: int = 1
    samples: tuple[int, ...] = ()

    @property
    def is_negative_infinity(self) -> bool:
        return self.value is None and not self.undetermined


def _sample_stride(f: Fan, d: ToricDivisor) -> int:
    """Stride clearing all denominators: coefficients first, then the
    vertices of the cleared polytope, so counts along the stride grow
    polynomially (integral-polytope dilations)."""
    q = 1
    for x in d:
        q = q * x.denominator // gcd(q, x.denominator)
    poly = divisor_polytope(f, scale_divisor(d, q))
    v = 1
    for vertex in poly.vertices():
        for coord in vertex:
            v = v * coord.denominator // gcd(v, coord.denominator)
    return q * v


def _difference_degree(samples: Sequence[int]) -> int | None:
    """Degree at which the finite-difference table stabilizes; None when it
    does not stabilize within the available rows."""
    row = list(samples)
    degree = 0
    while len(row) >= 3:
        if all(x == row[0] for x in row):
            if row[0] != 0:
                return degree
            return max(degree - 1, 0)
        row = [b - a for a, b in zip(row, row[1:])]
        degree += 1
    return None


def kodaira_dimension(
    f: Fan, d: ToricDivisor, samples: int = DEFAULT_SAMPLES
) -> KodairaReport:
    """Two routes, asserted equal on nef divisors.

    (a) growth degree of the section counts along the denominator-clearing
    stride, by exact finite differences; (b) for nef divisors, the dimension
    of the divisor polytope. Disagreement raises: it signals a bug, not bad
    input.
    """
    if not f.complete:
        raise FanError("Kodaira dimension requires a complete fan")
    stride = _sample_stride(f, d)
    counts = tuple(section_count(f, d, stride * j) for j in range(1, samples + 1))
    nef = f.simplicial and is_nef_divisor(f, d)

    if all(c == 0 for c in counts):
        value = None
        report = KodairaReport(
            value, None, None, route_b_skipped=not nef, sample_stride=stride, samples=counts
        )
        if nef:
            poly_dim = divisor_polytope(f, d).dimension()
            if poly_dim != -1:
                raise AssertionError(
                    f"routes disagree: counts vanish but polytope has dim {poly_dim}"
                )
        return report

    growth = _difference_degree(counts)
    if growth is None:
        return KodairaReport(
            None,
            None,
            None,
            route_b_skipped=not nef,
            undetermined=True,
            sample_stride=stride,
            samples=counts,
        )
    if nef:
        poly_dim = divisor_polytope(f, d).dimension()
        if poly_dim != growth:
            raise AssertionError(
                f"routes disagree: growth degree {growth}, polytope dimension {poly_dim}"
            )
        return KodairaReport(
            growth, growth, poly_dim, route_b_skipped=False, sample_stride=stride, samples=counts
        )
    return KodairaReport(
        growth, growth, None, route_b_skipped=True, sample_stride=stride, samples=counts
    )


def check_kappa_scaling(f: Fan, d: ToricDivisor, a: int) -> bool:
    """kappa(D) == kappa(aD) for positive integers a."""
    if a <= 0:
        raise ValueError("scaling factor must be positive")
    left = kodaira_dimension(f, d)
    right = kodaira_dimension(f, scale_divisor(d, a))
    if left.undetermined or right.undetermined:
        return False
    return left.value == right.value


@dataclass(frozen=True)
class BigReport:
    is_big: bool
    epsilon: Fraction | None


def big_check(f: Fan, d: ToricDivisor, l: ToricDivisor | None = None) -> BigReport:
    """Big iff the divisor polytope is full-dimensional; when big and L is
    given, find a positive epsilon with D - epsilon L still big by exact
    halving (denominators capped at 2^10)."""
    if not f.complete:
        raise FanError("bigness requires a complete fan")

    def big(div: ToricDivisor) -> bool:
        return divisor_polytope(f, div).dimension() == f.rank

    if not big(d):
        return BigReport(False, None)
    if l is None:
        return BigReport(True, None)
    t = Fraction(1)
    while t.denominator <= EPSILON_DENOMINATOR_BOUND:
        candidate = tuple(x - t * y for x, y in zip(d, l))
        if big(candidate):
            return BigReport(True, t)
        t = t / 2
    return BigReport(True, None)


@dataclass(frozen=True)
class TruncationReport:
    level_bound: int
    truncation: int
    full_generator_profile: dict[int, int]
    truncated_generator_profile: dict[int, int]
    truncation_degrees_bounded: bool


def truncation_probe(
    f: Fan, d: ToricDivisor, i: int, level_bound: int = 8
) -> TruncationReport:
    """Compare minimal generator degrees of the graded section semigroup
    S = {(m, u) : u in P_floor(mD)} with those of its i-th truncation.

    The probe does not decide finite generation; it reports generator degree
    profiles up to the level bound and checks that the truncation is
    generated in degrees no higher than the full semigroup's bound.
    """
    if not f.complete:
        raise FanError("truncation probe requires a complete fan")
    if i <= 0:
        raise ValueError("truncation index must be positive")
    levels: dict[int, set[tuple[int, ...]]] = {}
    for m in range(1, level_bound + 1):
        rounded = floor_divisor(scale_divisor(d, m))
        levels[m] = set(
            tuple(p) for p in divisor_polytope(f, rounded).lattice_points()
        )
    full_profile = _generator_profile(levels)
    truncated_levels = {
        m // i: levels[m] for m in range(i, level_bound + 1, i)
    }
    truncated_profile = _generator_profile(truncated_levels)
    full_bound = max(full_profile, default=0)
    trunc_bound = max(truncated_profile, default=0)
    return TruncationReport(
        level_bound,
        i,
        full_profile,
        truncated_profile,
        truncation_degrees_bounded=trunc_bound <= max(full_bound, 1),
    )


def _generator_profile(levels: dict[int, set[tuple[int, ...]]]) -> dict[int, int]:
    """Count, per degree, the semigroup elements not expressible as sums of
    two lower-degree elements."""
    profile: dict[int, int] = {}
    degrees = sorted(levels)
    for m in degrees:
        for u in sorted(levels[m]):
            generated = False
            for m1 in degrees:
                m2 = m - m1
                if m1 > m2 or m2 not in levels:
                    break
                for u1 in levels[m1]:
                    u2 = tuple(a - b for a, b in zip(u, u1))
                    if u2 in levels[m2]:
                        generated = True
                        break
                if generated:
                    break
            if not generated:
                profile[m] = profile.get(m, 0) + 1
    return profile


def sections_table(f: Fan, d: ToricDivisor, bound: int) -> list[tuple[int, int]]:
    """The (m, h^0(floor(mD))) table used by reports and the CLI."""
    return [(m, section_count(f, d, m)) for m in range(1, bound + 1)]

"""Rational polytopes: H-representation first, exact V-representation on demand.

Conversion enumerates vertex candidates from dim-subsets of supporting
hyperplanes; that is all the generality the engine needs (ambient rank <= 4).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor
from typing import Iterable, Sequence

from .linalg import (
    RationalMatrix,
    NoSolutionError,
    UnderdeterminedError,
    as_fraction,
    dot,
    in_cone,
    matrix_rank,
    nonneg_combination,
    solve_linear,
)

LatticePoint = tuple[int, ...]


@dataclass(frozen=True)
class HalfSpace:
    """Affine inequality coeffs . x >= rhs."""

    coeffs: tuple[Fraction, ...]
    rhs: Fraction

    @classmethod
    def make(cls, coeffs: Iterable, rhs) -> "HalfSpace":
        return cls(tuple(as_fraction(c) for c in coeffs), as_fraction(rhs))

    def holds(self, point: Sequence) -> bool:
        return dot(self.coeffs, point) >= self.rhs

    def tight(self, point: Sequence) -> bool:
        return dot(self.coeffs, point) == self.rhs


@dataclass(frozen=True)
class RationalPolytope:
    """Intersection of rational half-spaces in a fixed ambient dimension."""

    dim_ambient: int
    halfspaces: tuple[HalfSpace, ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_inequalities(cls, dim: int, rows: Iterable[tuple[Iterable, object]]) -> "RationalPolytope":
        hs = []
        for coeffs, rhs in rows:
            h = HalfSpace.make(coeffs, rhs)
            if len(h.coeffs) != dim:
                raise ValueError("inequality has wrong arity")
            hs.append(h)
        return cls(dim, tuple(hs))

    def contains(self, point: Sequence) -> bool:
        return all(h.holds(point) for h in self.halfspaces)

    def is_empty(self) -> bool:
        if "empty" not in self._cache:
            self._cache["empty"] = self._feasibility() is None
        return self._cache["empty"]

    def _feasibility(self):
        """A feasible rational point, or None.

        Rewrites A x >= b as A x+ - A x- - s = b with all variables >= 0 and
        runs the exact phase-1 simplex.
        """
        if self.dim_ambient == 0:
            return () if all(h.rhs <= 0 for h in self.halfspaces) else None
        if not self.halfspaces:
            return (Fraction(0),) * self.dim_ambient
        m = len(self.halfspaces)
        cols: list[tuple] = []
        for j in range(self.dim_ambient):
            cols.append(tuple(h.coeffs[j] for h in self.halfspaces))
        for j in range(self.dim_ambient):
            cols.append(tuple(-h.coeffs[j] for h in self.halfspaces))
        for i in range(m):
            cols.append(tuple(Fraction(-int(i == k)) for k in range(m)))
        lam = nonneg_combination(cols, [h.rhs for h in self.halfspaces])
        if lam is None:
            return None
        d = self.dim_ambient
        return tuple(lam[j] - lam[d + j] for j in range(d))

    def is_bounded(self) -> bool:
        """The recession cone {d : A d >= 0} is trivial.

        True iff the inequality normals positively span the ambient space.
        """
        if "bounded" not in self._cache:
            rows = [h.coeffs for h in self.halfspaces]
            unit = lambda i, s: tuple(Fraction(s * int(j == i)) for j in range(self.dim_ambient))
            self._cache["bounded"] = all(
                in_cone(rows, unit(i, s))
                for i in range(self.dim_ambient)
                for s in (1, -1)
            )
        return self._cache["bounded"]

    def vertices(self) -> tuple[tuple[Fraction, ...], ...]:
        """Exact vertices, sorted lexicographically.

        Each vertex solves some dim-subset of tight hyperplanes and satisfies
        every inequality.
        """
        if "vertices" in self._cache:
            return self._cache["vertices"]
        d = self.dim_ambient
        found: set[tuple[Fraction, ...]] = set()
        if d == 0:
            if all(h.rhs <= 0 for h in self.halfspaces):
                found.add(())
        else:
            for subset in itertools.combinations(range(len(self.halfspaces)), d):
                mat = RationalMatrix.from_rows(
                    [self.halfspaces[i].coeffs for i in subset]
                )
                rhs = [self.halfspaces[i].rhs for i in subset]
                try:
                    point = solve_linear(mat, rhs)
                except (NoSolutionError, UnderdeterminedError):
                    continue
                if self.contains(point):
                    found.add(point)
        result = tuple(sorted(found))
        self._cache["vertices"] = result
        return result

    def dimension(self) -> int:
        """Affine dimension; -1 for the empty polytope.

        Only valid for bounded polytopes (vertices determine the hull).
        """
        verts = self.vertices()
        if not verts:
            return -1
        v0 = verts[0]
        rows = [tuple(a - b for a, b in zip(v, v0)) for v in verts[1:]]
        return matrix_rank(rows) if rows else 0

    def lattice_points(self) -> list[LatticePoint]:
        """All integral points, in lexicographic order.

        Bounding-box scan over the vertex hull with H-inequality filtering;
        denominators are cleared once so the inner loop is pure integer
        arithmetic, and the last axis is solved as an interval.
        """
        if not self.is_bounded():
            raise ValueError("enumeration requires bounded polytope")
        verts = self.vertices()
        if not verts:
            return []
        d = self.dim_ambient
        if d == 0:
            return [()]
        lo = [floor(min(v[i] for v in verts)) for i in range(d)]
        hi = [ceil(max(v[i] for v in verts)) for i in range(d)]

        int_rows: list[tuple[tuple[int, ...], int]] = []
        for h in self.halfspaces:
            denom = 1
            for c in h.coeffs:
                denom = denom * c.denominator // _gcd_int(denom, c.denominator)
            denom = denom * h.rhs.denominator // _gcd_int(denom, h.rhs.denominator)
            int_rows.append(
                (tuple(int(c * denom) for c in h.coeffs), int(h.rhs * denom))
            )

        points: list[LatticePoint] = []
        prefix_ranges = [range(lo[i], hi[i] + 1) for i in range(d - 1)]
        for prefix in itertools.product(*prefix_ranges):
            last_lo, last_hi = lo[d - 1], hi[d - 1]
            feasible = True
            for coeffs, rhs in int_rows:
                partial = sum(c * x for c, x in zip(coeffs, prefix))
                a = coeffs[d - 1]
                need = rhs - partial  # a * x_d >= need
                if a > 0:
                    bound = -((-need) // a)  # ceil division
                    if bound > last_lo:
                        last_lo = bound
                elif a < 0:
                    bound = need // a  # floor of need / a with a < 0
                    if bound < last_hi:
                        last_hi = bound
                elif need > 0:
                    feasible = False
                    break
                if last_lo > last_hi:
                    feasible = False
                    break
            if not feasible:
                continue
            points.extend(prefix + (x,) for x in range(last_lo, last_hi + 1))
        return points

    def scaled(self, factor) -> "RationalPolytope":
        """The dilate factor * P (H-representation scales linearly)."""
        f = as_fraction(factor)
        if f <= 0:
            raise ValueError("scaling factor must be positive")
        return RationalPolytope(
            self.dim_ambient,
            tuple(HalfSpace(h.coeffs, f * h.rhs) for h in self.halfspaces),
        )


def _gcd_int(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def convex_hull_contains(points: Sequence[Sequence], query: Sequence) -> bool:
    """Exact membership of query in conv(points), via homogenization."""
    gens = [(Fraction(1),) + tuple(as_fraction(x) for x in p) for p in points]
    target = (Fraction(1),) + tuple(as_fraction(x) for x in query)
    return nonneg_combination(gens, target) is not None


def simplex_polytope(vertices: Sequence[Sequence]) -> RationalPolytope:
    """H-representation of a full-dimensional simplex given d+1 vertices."""
    verts = [tuple(as_fraction(x) for x in v) for v in vertices]
    d = len(verts[0])
    if len(verts) != d + 1:
        raise ValueError("a d-simplex needs d+1 vertices")
    halves = []
    for skip in range(d + 1):
        rest = [verts[i] for i in range(d + 1) if i != skip]
        base = rest[0]
        span = [tuple(a - b for a, b in zip(v, base)) for v in rest[1:]]
        normal = _facet_normal(span, d)
        rhs = dot(normal, base)
        if dot(normal, verts[skip]) < rhs:
            normal = tuple(-c for c in normal)
            rhs = -rhs
        halves.append((normal, rhs))
    return RationalPolytope.from_inequalities(d, halves)


def _facet_normal(span: Sequence[tuple[Fraction, ...]], d: int) -> tuple[Fraction, ...]:
    """A nonzero rational vector orthogonal to d-1 independent vectors.

    Solves span . n = 0 with one coordinate pinned to keep the system square.
    """
    for pinned in range(d):
        rows = [list(v) for v in span]
        pin_row = [Fraction(int(j == pinned)) for j in range(d)]
        mat = RationalMatrix.from_rows(rows + [pin_row])
        rhs = [Fraction(0)] * len(span) + [Fraction(1)]
        try:
            return solve_linear(mat, rhs)
        except (NoSolutionError, UnderdeterminedError):
            continue
    raise ValueError("degenerate facet")

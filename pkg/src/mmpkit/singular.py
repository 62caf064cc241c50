"""Discrepancies by crepant pullback over negative-definite exceptional
configurations, singularity classification, Du Val recognition, lc thresholds
and lc polytopes.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .linalg import (
    RationalMatrix,
    as_fraction,
    format_fraction,
    is_negative_definite,
    solve_linear,
)
from .polytope import RationalPolytope


class SingularityError(ValueError):
    pass


class SingularityClass(Enum):
    TERMINAL = "terminal"
    CANONICAL = "canonical"
    KLT = "klt"
    LC = "lc"
    NOT_LC = "not-lc"

    def order(self) -> int:
        return ["terminal", "canonical", "klt", "lc", "not-lc"].index(self.value)


@dataclass(frozen=True)
class BoundarySlot:
    """A boundary divisor through the resolution: total-transform
    multiplicities along each exceptional curve, and whether the strict
    transform survives as a coefficient slot."""

    name: str
    mults: tuple[int, ...]
    strict_coeff_slot: bool = True


@dataclass(frozen=True)
class ResolutionData:
    """Exceptional curves E_1..E_n with their intersection matrix, K.E_i
    values, and boundary multiplicity data. The matrix must be negative
    definite (validated on construction)."""

    gram: RationalMatrix
    k_dot_e: tuple[Fraction, ...]
    boundaries: tuple[BoundarySlot, ...] = ()

    def __post_init__(self):
        if not self.gram.is_symmetric():
            raise SingularityError("intersection matrix must be symmetric")
        if not is_negative_definite(self.gram):
            raise SingularityError("intersection matrix must be negative definite")
        if len(self.k_dot_e) != self.gram.rows:
            raise SingularityError("need one K.E value per exceptional curve")
        for slot in self.boundaries:
            if len(slot.mults) != self.gram.rows:
                raise SingularityError("boundary multiplicities have wrong length")
            if any(m < 0 for m in slot.mults):
                raise SingularityError("total-transform multiplicities are >= 0")

    @property
    def count(self) -> int:
        return self.gram.rows

    def self_intersections(self) -> tuple[Fraction, ...]:
        return tuple(self.gram.entries[i][i] for i in range(self.count))

    def arithmetic_genus(self, i: int) -> Fraction:
        return 1 + (self.k_dot_e[i] + self.gram.entries[i][i]) / 2

    def strict_dot(self, slot: BoundarySlot) -> tuple[Fraction, ...]:
        """Intersection of the strict transform with each E_j, from
        f*C . E_j = 0: strict.E_j = -(Q a)_j."""
        qa = self.gram.mul_vector([Fraction(m) for m in slot.mults])
        return tuple(-x for x in qa)


@dataclass(frozen=True)
class DiscrepancyReport:
    discrepancies: tuple[Fraction, ...]
    strict_coefficients: tuple[Fraction, ...]
    data: ResolutionData

    def exceptional_by_coefficients(self) -> tuple[Fraction, ...]:
        """Coefficients of the exceptional part of B_Y (equal to -d_i)."""
        return tuple(-d for d in self.discrepancies)


def crepant_pullback(
    r: ResolutionData, boundary_coefficients: Sequence = ()
) -> DiscrepancyReport:
    """Solve (K_Y + B_strict + sum e_i E_i) . E_j = 0 for all j.

    The negative-definite matrix is nonsingular, so the solution is unique;
    discrepancies are d_i = -e_i.
    """
    coeffs = tuple(as_fraction(t) for t in boundary_coefficients)
    if coeffs and len(coeffs) != len(r.boundaries):
        raise SingularityError("need one coefficient per boundary slot")
    if not coeffs:
        coeffs = tuple(Fraction(0) for _ in r.boundaries)
    rhs = [-k for k in r.k_dot_e]
    for t, slot in zip(coeffs, r.boundaries):
        if t == 0:
            continue
        strict = r.strict_dot(slot)
        for j in range(r.count):
            rhs[j] -= t * strict[j]
    e = solve_linear(r.gram, rhs)
    discrepancies = tuple(-x for x in e)
    check = r.gram.mul_vector(e)
    for j in range(r.count):
        residue = r.k_dot_e[j] + check[j]
        for t, slot in zip(coeffs, r.boundaries):
            residue += t * r.strict_dot(slot)[j]
        assert residue == 0
    return DiscrepancyReport(discrepancies, coeffs, r)


def classify(rep: DiscrepancyReport) -> SingularityClass:
    """Classification from the coefficients of B_Y.

    Terminal: exceptional coefficients < 0 and no strict boundary;
    canonical: <= 0 and no strict boundary; klt: all < 1; lc: all <= 1.
    """
    exc = rep.exceptional_by_coefficients()
    strict = rep.strict_coefficients
    if all(c < 0 for c in exc) and all(t == 0 for t in strict):
        return SingularityClass.TERMINAL
    if all(c <= 0 for c in exc) and all(t == 0 for t in strict):
        return SingularityClass.CANONICAL
    if all(c < 1 for c in exc) and all(t < 1 for t in strict):
        return SingularityClass.KLT
    if all(c <= 1 for c in exc) and all(t <= 1 for t in strict):
        return SingularityClass.LC
    return SingularityClass.NOT_LC


@dataclass(frozen=True)
class NegativityVerdict:
    status: str  # "effective-forced" | "violation" | "precondition-failed"
    witness_index: int | None = None
    witness_value: Fraction | None = None


def negativity_check(
    r: ResolutionData, d_coefficients: Sequence
) -> NegativityVerdict:
    """Check the negativity lemma pattern on an exceptional combination D.

    Requires -D nef over the base, i.e. D.E_i <= 0 for every i; then D must
    be effective coefficientwise. Reports whichever fails.
    """
    d = tuple(as_fraction(x) for x in d_coefficients)
    if len(d) != r.count:
        raise SingularityError("combination has wrong length")
    pairing = r.gram.mul_vector(d)
    for i, value in enumerate(pairing):
        if value > 0:
            return NegativityVerdict("precondition-failed", i, value)
    for i, value in enumerate(d):
        if value < 0:
            return NegativityVerdict("violation", i, value)
    return NegativityVerdict("effective-forced")


DU_VAL_SHAPES = ("A", "D", "E6", "E7", "E8")


def du_val_type(r: ResolutionData) -> str:
    """Match the dual graph of a configuration of (-2)-curves against the
    ADE shapes; returns e.g. 'A3', 'D5', 'E7', or 'not-du-val'."""
    n = r.count
    if n > 10:
        raise SingularityError("dual-graph matching capped at 10 curves")
    for i in range(n):
        if r.gram.entries[i][i] != -2 or r.k_dot_e[i] != 0:
            return "not-du-val"
        if r.arithmetic_genus(i) != 0:
            return "not-du-val"
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            value = r.gram.entries[i][j]
            if value == 0:
                continue
            if value != 1:
                return "not-du-val"
            edges.add((i, j))
    if len(edges) != n - 1 or not _is_connected(n, edges):
        return "not-du-val"
    shape = _tree_hash(n, edges)
    for name, reference in _ade_reference_graphs(n):
        if shape == _tree_hash(n, reference):
            return name
    return "not-du-val"


def _is_connected(n: int, edges: set[tuple[int, int]]) -> bool:
    if n == 0:
        return False
    seen = {0}
    frontier = [0]
    adj = {i: [] for i in range(n)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    while frontier:
        node = frontier.pop()
        for nxt in adj[node]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return len(seen) == n


def _tree_hash(n: int, edges: set[tuple[int, int]]) -> str:
    """AHU canonical form of an unrooted tree, rooted at its centre(s)."""
    adj = {i: set() for i in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    if n == 1:
        return "()"
    # Peel leaves to find the centre.
    degrees = {i: len(adj[i]) for i in range(n)}
    layer = [i for i in range(n) if degrees[i] <= 1]
    remaining = n
    live = dict(degrees)
    removed = set()
    while remaining > 2:
        nxt = []
        for leaf in layer:
            removed.add(leaf)
            remaining -= 1
            for neighbour in adj[leaf]:
                if neighbour in removed:
                    continue
                live[neighbour] -= 1
                if live[neighbour] == 1:
                    nxt.append(neighbour)
        layer = nxt
    centres = [i for i in range(n) if i not in removed]

    def encode(node: int, parent: int | None) -> str:
        children = sorted(
            encode(child, node) for child in adj[node] if child != parent
        )
        return "(" + "".join(children) + ")"

    return min(encode(c, None) for c in centres)


def _ade_reference_graphs(n: int) -> list[tuple[str, set[tuple[int, int]]]]:
    graphs: list[tuple[str, set[tuple[int, int]]]] = []
    if n >= 1:
        graphs.append((f"A{n}", {(i, i + 1) for i in range(n - 1)}))
    if n >= 4:
        # Path 0..n-2 with the extra node n-1 attached to node 1: arms of
        # lengths 1, 1, n-3 around the branch node.
        d_edges = {(i, i + 1) for i in range(n - 2)} | {(1, n - 1)}
        graphs.append((f"D{n}", d_edges))
    if n == 6:
        graphs.append(("E6", {(0, 1), (1, 2), (2, 3), (3, 4), (2, 5)}))
    if n == 7:
        graphs.append(("E7", {(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (2, 6)}))
    if n == 8:
        graphs.append(("E8", {(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (2, 7)}))
    return graphs


def lc_threshold(r: ResolutionData, slot_index: int = 0) -> Fraction:
    """Largest t with (X, tC) log canonical, for the boundary slot C.

    Equals min over exceptional curves of (d_i + 1) / a_i (a_i > 0), capped
    at 1 by the strict transform.
    """
    if not r.boundaries:
        raise SingularityError("no boundary slot on this resolution data")
    slot = r.boundaries[slot_index]
    base = crepant_pullback(r)
    candidates = []
    if slot.strict_coeff_slot:
        candidates.append(Fraction(1))
    for d, a in zip(base.discrepancies, slot.mults):
        if a > 0:
            candidates.append((d + 1) / a)
    if not candidates:
        raise SingularityError("divisor misses the resolution locus")
    return min(candidates)


@dataclass(frozen=True)
class ContractedCurveReport:
    discrepancy: Fraction | None
    tag: SingularityClass


def contracted_curve_singularity(
    self_intersection: int, genus: int
) -> ContractedCurveReport:
    """Discrepancy of the point obtained by contracting a curve with the
    given self-intersection and genus: solve (K + eE).E = 0 with
    K.E = 2g - 2 - E^2."""
    if self_intersection >= 0:
        raise SingularityError("curve is not contractible: E^2 must be negative")
    a = -self_intersection
    k_dot_e = 2 * genus - 2 + a
    e = Fraction(k_dot_e, a)
    d = -e
    if genus == 0:
        if d > 0:
            tag = SingularityClass.TERMINAL
        elif d == 0:
            tag = SingularityClass.CANONICAL
        else:
            tag = SingularityClass.KLT
    elif genus == 1:
        tag = SingularityClass.LC
    else:
        tag = SingularityClass.NOT_LC
    return ContractedCurveReport(d, tag)


def lc_polytope(r: ResolutionData) -> RationalPolytope:
    """Polytope of boundary coefficient vectors t with (X, sum t_k C_k) lc:
    0 <= t_k <= 1 and sum_k t_k a_ik <= 1 + d_i per exceptional curve."""
    slots = r.boundaries
    if not slots:
        raise SingularityError("no boundary slots")
    base = crepant_pullback(r)
    k = len(slots)
    halves: list[tuple[tuple[Fraction, ...], Fraction]] = []
    for j in range(k):
        unit = tuple(Fraction(int(i == j)) for i in range(k))
        halves.append((unit, Fraction(0)))
        halves.append((tuple(-x for x in unit), Fraction(-1)))
    for i in range(r.count):
        row = tuple(Fraction(-slots[j].mults[i]) for j in range(k))
        rhs = -(Fraction(1) + base.discrepancies[i])
        halves.append((row, rhs))
    return RationalPolytope.from_inequalities(k, halves)


# Stock configurations used by fixtures and tests.

def single_curve(self_intersection: int, genus: int = 0, mult: int = 0) -> ResolutionData:
    a = -self_intersection
    if a <= 0:
        raise SingularityError("self-intersection must be negative")
    boundaries = ()
    if mult:
        boundaries = (BoundarySlot("C", (mult,)),)
    return ResolutionData(
        RationalMatrix.from_rows([[self_intersection]]),
        (Fraction(2 * genus - 2 + a),),
        boundaries,
    )


def chain_of_minus_two_curves(n: int) -> ResolutionData:
    rows = [
        [Fraction(-2 if i == j else (1 if abs(i - j) == 1 else 0)) for j in range(n)]
        for i in range(n)
    ]
    return ResolutionData(
        RationalMatrix(tuple(tuple(r) for r in rows)),
        tuple(Fraction(0) for _ in range(n)),
    )


def star_of_minus_two_curves(n: int) -> ResolutionData:
    """D_n configuration: one branch node with arms of lengths 1, 1, n-3."""
    if n < 4:
        raise SingularityError("D-type needs at least four curves")
    edges = {(i, i + 1) for i in range(n - 2)} | {(1, n - 1)}
    return _minus_two_configuration(n, edges)


def e_type_configuration(n: int) -> ResolutionData:
    if n == 6:
        edges = {(0, 1), (1, 2), (2, 3), (3, 4), (2, 5)}
    elif n == 7:
        edges = {(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (2, 6)}
    elif n == 8:
        edges = {(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (2, 7)}
    else:
        raise SingularityError("E-type exists for n in {6, 7, 8}")
    return _minus_two_configuration(n, edges)


def _minus_two_configuration(n: int, edges: set[tuple[int, int]]) -> ResolutionData:
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        rows[i][i] = Fraction(-2)
    for a, b in edges:
        rows[a][b] = rows[b][a] = Fraction(1)
    return ResolutionData(
        RationalMatrix(tuple(tuple(r) for r in rows)),
        tuple(Fraction(0) for _ in range(n)),
    )


def nodal_curve_data() -> ResolutionData:
    """One blow-up at a node: E^2 = -1, node multiplicity 2."""
    return single_curve(-1, mult=2)


def cusp_curve_data() -> ResolutionData:
    """Three blow-ups resolving a cusp: multiplicities (2, 3, 6) along the
    exceptional curves, gram from the standard tower."""
    gram = RationalMatrix.from_rows(
        [[-3, 0, 1], [0, -2, 1], [1, 1, -1]]
    )
    return ResolutionData(
        gram,
        (Fraction(1), Fraction(0), Fraction(-1)),
        (BoundarySlot("C", (2, 3, 6)),),
    )


def two_branches_data() -> ResolutionData:
    """Two smooth transverse branches through a smooth point, one blow-up."""
    return ResolutionData(
        RationalMatrix.from_rows([[-1]]),
        (Fraction(-1),),
        (BoundarySlot("C1", (1,)), BoundarySlot("C2", (1,))),
    )


def resolution_to_json(r: ResolutionData) -> dict:
    return {
        "gram": [[format_fraction(x) for x in row] for row in r.gram.entries],
        "K_dot_E": [format_fraction(x) for x in r.k_dot_e],
        "boundaries": [
            {
                "name": slot.name,
                "mults": list(slot.mults),
                "strict_coeff_slot": slot.strict_coeff_slot,
            }
            for slot in r.boundaries
        ],
    }


def resolution_from_json(data: dict) -> ResolutionData:
    return ResolutionData(
        RationalMatrix.from_rows(data["gram"]),
        tuple(as_fraction(x) for x in data["K_dot_E"]),
        tuple(
            BoundarySlot(
                slot.get("name", f"B{i}"),
                tuple(int(m) for m in slot["mults"]),
                bool(slot.get("strict_coeff_slot", True)),
            )
            for i, slot in enumerate(data.get("boundaries", []))
        ),
    )

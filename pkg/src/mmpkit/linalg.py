"""Exact rational linear algebra and integer lattice utilities.

Everything here works over `fractions.Fraction` or plain `int`; no floating
point value is ever constructed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

LatticeVector = tuple[int, ...]
RowVector = tuple[Fraction, ...]


class NoSolutionError(ValueError):
    """The linear system is inconsistent."""


class UnderdeterminedError(ValueError):
    """The linear system has rank < unknowns; carries a kernel witness."""

    def __init__(self, message: str, kernel_witness: RowVector):
        super().__init__(message)
        self.kernel_witness = kernel_witness


def as_fraction(x) -> Fraction:
    """Coerce an int, Fraction or 'p/q' string to an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot coerce {x!r} to an exact rational")


def format_fraction(x: Fraction) -> str:
    """Serialize a rational as 'p/q' (or 'p' when q == 1)."""
    return str(Fraction(x))


@dataclass(frozen=True)
class RationalMatrix:
    """Immutable rectangular matrix of exact rationals, row-major."""

    entries: tuple[RowVector, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("matrix needs at least one row")
        width = len(self.entries[0])
        if any(len(row) != width for row in self.entries):
            raise ValueError("matrix is not rectangular")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable]) -> "RationalMatrix":
        return cls(tuple(tuple(as_fraction(x) for x in row) for row in rows))

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def is_symmetric(self) -> bool:
        if self.rows != self.cols:
            return False
        return all(
            self.entries[i][j] == self.entries[j][i]
            for i in range(self.rows)
            for j in range(i + 1, self.cols)
        )

    def row(self, i: int) -> RowVector:
        return self.entries[i]

    def mul_vector(self, v: Sequence) -> RowVector:
        vf = [as_fraction(x) for x in v]
        if len(vf) != self.cols:
            raise ValueError("dimension mismatch")
        return tuple(sum((row[j] * vf[j] for j in range(self.cols)), Fraction(0)) for row in self.entries)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix(tuple(tuple(self.entries[i][j] for j in cols) for i in rows))


def dot(u: Sequence, v: Sequence) -> Fraction:
    if len(u) != len(v):
        raise ValueError("dimension mismatch")
    return sum((as_fraction(a) * as_fraction(b) for a, b in zip(u, v)), Fraction(0))


def vec_add(u: Sequence, v: Sequence) -> tuple:
    return tuple(a + b for a, b in zip(u, v))


def vec_sub(u: Sequence, v: Sequence) -> tuple:
    return tuple(a - b for a, b in zip(u, v))


def vec_scale(c, v: Sequence) -> tuple:
    cf = as_fraction(c)
    return tuple(cf * as_fraction(x) for x in v)


def primitivize(v: LatticeVector) -> LatticeVector:
    """Divide an integer vector by the gcd of its coordinates.

    The zero vector has no primitive representative.
    """
    if all(x == 0 for x in v):
        raise ValueError("zero vector has no primitive representative")
    g = 0
    for x in v:
        g = gcd(g, abs(x))
    return tuple(x // g for x in v)


def rational_direction(v: Sequence[Fraction]) -> LatticeVector:
    """Primitive integer vector on the ray spanned by a rational vector."""
    fracs = [as_fraction(x) for x in v]
    if all(x == 0 for x in fracs):
        raise ValueError("zero vector has no primitive representative")
    denom = 1
    for x in fracs:
        denom = denom * x.denominator // gcd(denom, x.denominator)
    ints = tuple(int(x * denom) for x in fracs)
    return primitivize(ints)


def determinant(m: RationalMatrix) -> Fraction:
    """Exact determinant by fraction-free style Gaussian elimination."""
    if m.rows != m.cols:
        raise ValueError("determinant requires a square matrix")
    n = m.rows
    a = [list(row) for row in m.entries]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det *= a[col][col]
        inv = a[col][col]
        for r in range(col + 1, n):
            if a[r][col] != 0:
                factor = a[r][col] / inv
                a[r] = [a[r][j] - factor * a[col][j] for j in range(n)]
    return det


def solve_linear(a: RationalMatrix, b: Sequence) -> RowVector:
    """Solve A x = b exactly.

    Raises NoSolutionError on inconsistency and UnderdeterminedError (with a
    kernel witness) on rank deficiency, so callers never see a silently wrong
    answer.
    """
    bf = [as_fraction(x) for x in b]
    if len(bf) != a.rows:
        raise ValueError("right-hand side has wrong length")
    rows, cols = a.rows, a.cols
    aug = [list(a.entries[i]) + [bf[i]] for i in range(rows)]

    pivots: list[int] = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if aug[i][c] != 0), None)
        if pivot is None:
            continue
        aug[r], aug[pivot] = aug[pivot], aug[r]
        inv = aug[r][c]
        aug[r] = [x / inv for x in aug[r]]
        for i in range(rows):
            if i != r and aug[i][c] != 0:
                factor = aug[i][c]
                aug[i] = [aug[i][j] - factor * aug[r][j] for j in range(cols + 1)]
        pivots.append(c)
        r += 1
        if r == rows:
            break

    for i in range(r, rows):
        if aug[i][cols] != 0:
            raise NoSolutionError("inconsistent linear system")

    if len(pivots) < cols:
        free = next(c for c in range(cols) if c not in pivots)
        witness = [Fraction(0)] * cols
        witness[free] = Fraction(1)
        for i, c in enumerate(pivots):
            witness[c] = -aug[i][free]
        raise UnderdeterminedError(
            f"rank {len(pivots)} < {cols} unknowns", tuple(witness)
        )

    x = [Fraction(0)] * cols
    for i, c in enumerate(pivots):
        x[c] = aug[i][cols]
    return tuple(x)


def is_negative_definite(q: RationalMatrix) -> bool:
    """Sylvester criterion: leading principal minors alternate, starting < 0."""
    if not q.is_symmetric():
        raise ValueError("negative definiteness requires a symmetric matrix")
    n = q.rows
    for k in range(1, n + 1):
        minor = determinant(q.submatrix(range(k), range(k)))
        if k % 2 == 1 and minor >= 0:
            return False
        if k % 2 == 0 and minor <= 0:
            return False
    return True


def matrix_rank(rows: Sequence[Sequence]) -> int:
    """Rank of a list of rational row vectors."""
    work = [[as_fraction(x) for x in row] for row in rows]
    if not work:
        return 0
    cols = len(work[0])
    rank = 0
    for c in range(cols):
        pivot = next((i for i in range(rank, len(work)) if work[i][c] != 0), None)
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        inv = work[rank][c]
        work[rank] = [x / inv for x in work[rank]]
        for i in range(len(work)):
            if i != rank and work[i][c] != 0:
                f = work[i][c]
                work[i] = [work[i][j] - f * work[rank][j] for j in range(cols)]
        rank += 1
    return rank


def _swap_rows(m: list[list[int]], i: int, j: int) -> None:
    m[i], m[j] = m[j], m[i]


def smith_diagonal(rows: Sequence[Sequence[int]]) -> list[int]:
    """Nonnegative diagonal of the Smith normal form of an integer matrix.

    Only the invariant factors are needed (lattice indices, regularity
    tests), so transform matrices are not tracked.
    """
    a = [list(map(int, row)) for row in rows]
    if not a or not a[0]:
        return []
    nrows, ncols = len(a), len(a[0])
    diag: list[int] = []
    top = 0
    left = 0
    while top < nrows and left < ncols:
        pivot = None
        best = None
        for i in range(top, nrows):
            for j in range(left, ncols):
                if a[i][j] != 0 and (best is None or abs(a[i][j]) < best):
                    best = abs(a[i][j])
                    pivot = (i, j)
        if pivot is None:
            break
        pi, pj = pivot
        _swap_rows(a, top, pi)
        for row in a:
            row[left], row[pj] = row[pj], row[left]
        # Reduce until the pivot divides its whole row and column.
        while True:
            done = True
            for i in range(top + 1, nrows):
                if a[i][left] != 0:
                    qv = a[i][left] // a[top][left]
                    for j in range(left, ncols):
                        a[i][j] -= qv * a[top][j]
                    if a[i][left] != 0:
                        _swap_rows(a, top, i)
                        done = False
            for j in range(left + 1, ncols):
                if a[top][j] != 0:
                    qv = a[top][j] // a[top][left]
                    for i in range(top, nrows):
                        a[i][j] -= qv * a[i][left]
                    if a[top][j] != 0:
                        for row in a:
                            row[left], row[j] = row[j], row[left]
                        done = False
            if done:
                break
        diag.append(abs(a[top][left]))
        top += 1
        left += 1
    return diag


def lattice_index(rows: Sequence[Sequence[int]]) -> int:
    """Index of the lattice spanned by integer vectors inside its saturation.

    Equals the product of the nonzero Smith invariant factors; 1 means the
    vectors extend to a lattice basis.
    """
    return max(1, prod_nonzero(smith_diagonal(rows)))


def prod_nonzero(values: Iterable[int]) -> int:
    result = 1
    for v in values:
        if v != 0:
            result *= v
    return result


def integer_kernel_basis(rows: Sequence[Sequence[int]]) -> list[LatticeVector]:
    """Basis of the integer kernel {x : A x = 0} of an integer matrix.

    Column reduction with a tracked unimodular transform, so the result
    generates the full kernel lattice (not just a finite-index sublattice).
    """
    a = [list(map(int, row)) for row in rows]
    if not a or not a[0]:
        return []
    nrows, ncols = len(a), len(a[0])
    transform = [[int(i == j) for j in range(ncols)] for i in range(ncols)]

    def col_op(k: int, j: int, q: int) -> None:
        for r in range(nrows):
            a[r][k] -= q * a[r][j]
        for r in range(ncols):
            transform[r][k] -= q * transform[r][j]

    def col_swap(k: int, j: int) -> None:
        for r in range(nrows):
            a[r][k], a[r][j] = a[r][j], a[r][k]
        for r in range(ncols):
            transform[r][k], transform[r][j] = transform[r][j], transform[r][k]

    frontier = 0
    for i in range(nrows):
        if frontier == ncols:
            break
        while True:
            nonzero = sorted(
                (j for j in range(frontier, ncols) if a[i][j] != 0),
                key=lambda j: abs(a[i][j]),
            )
            if len(nonzero) <= 1:
                break
            col_op(nonzero[1], nonzero[0], a[i][nonzero[1]] // a[i][nonzero[0]])
        nonzero = [j for j in range(frontier, ncols) if a[i][j] != 0]
        if nonzero:
            if nonzero[0] != frontier:
                col_swap(nonzero[0], frontier)
            frontier += 1

    # Columns past the frontier are zero in every row: kernel generators.
    return [tuple(transform[r][j] for r in range(ncols)) for j in range(frontier, ncols)]


def nonneg_combination(
    generators: Sequence[Sequence], target: Sequence
) -> list[Fraction] | None:
    """Coefficients lam >= 0 with sum(lam_i * generators[i]) == target, or None.

    Exact phase-1 simplex with Bland's rule; sizes here are desk scale.
    """
    gens = [tuple(as_fraction(x) for x in g) for g in generators]
    tgt = tuple(as_fraction(x) for x in target)
    m = len(tgt)
    n = len(gens)
    if n == 0:
        return [] if all(x == 0 for x in tgt) else None
    # Standard form: columns = generators, then artificial identity columns.
    # Flip rows so b >= 0.
    rows = []
    b = []
    for i in range(m):
        coeffs = [gens[j][i] for j in range(n)]
        rhs = tgt[i]
        if rhs < 0:
            coeffs = [-c for c in coeffs]
            rhs = -rhs
        rows.append(coeffs)
        b.append(rhs)
    # Tableau with artificial variables n..n+m-1; minimize their sum.
    width = n + m
    tab = [rows[i] + [Fraction(int(k == i)) for k in range(m)] + [b[i]] for i in range(m)]
    basis = [n + i for i in range(m)]
    # Objective row: sum of artificial rows (phase 1 reduced costs).
    obj = [Fraction(0)] * (width + 1)
    for i in range(m):
        for j in range(width + 1):
            obj[j] += tab[i][j]

    while True:
        enter = next((j for j in range(width) if j not in basis and obj[j] > 0), None)
        if enter is None:
            break
        ratios = [
            (tab[i][width] / tab[i][enter], i)
            for i in range(m)
            if tab[i][enter] > 0
        ]
        if not ratios:
            return None  # unbounded phase 1 cannot happen, defensive
        ratios.sort(key=lambda t: (t[0], basis[t[1]]))
        _, leave = ratios[0]
        piv = tab[leave][enter]
        tab[leave] = [x / piv for x in tab[leave]]
        for i in range(m):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [tab[i][j] - f * tab[leave][j] for j in range(width + 1)]
        f = obj[enter]
        obj = [obj[j] - f * tab[leave][j] for j in range(width + 1)]
        basis[leave] = enter

    if obj[width] != 0:
        return None
    lam = [Fraction(0)] * n
    for i, var in enumerate(basis):
        if var < n:
            lam[var] = tab[i][width]
        elif tab[i][width] != 0:
            return None  # artificial stuck at a positive level
    return lam


def in_cone(generators: Sequence[Sequence], v: Sequence) -> bool:
    """Exact membership of v in the cone spanned by the generators."""
    return nonneg_combination(generators, v) is not None


def has_nontrivial_nonneg_relation(vectors: Sequence[Sequence[int]]) -> bool:
    """True iff sum(lam_i v_i) = 0 has a solution with lam >= 0, lam != 0.

    Equivalent to the cone spanned by the vectors containing a line.
    """
    n = len(vectors)
    if n == 0:
        return False
    dim = len(vectors[0])
    # Normalize with sum(lam) = 1 and test feasibility.
    gens = [tuple(v) + (1,) for v in vectors]
    target = tuple([0] * dim) + (1,)
    return nonneg_combination(gens, target) is not None

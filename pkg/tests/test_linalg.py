from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from mmpkit.linalg import (
    RationalMatrix,
    NoSolutionError,
    UnderdeterminedError,
    determinant,
    has_nontrivial_nonneg_relation,
    in_cone,
    integer_kernel_basis,
    is_negative_definite,
    lattice_index,
    nonneg_combination,
    primitivize,
    smith_diagonal,
    solve_linear,
)


def test_primitivize_examples():
    assert primitivize((2, 4)) == (1, 2)
    assert primitivize((1, 0)) == (1, 0)
    assert primitivize((-3, 6, 9)) == (-1, 2, 3)


def test_primitivize_zero_vector():
    with pytest.raises(ValueError, match="zero vector"):
        primitivize((0, 0, 0))


@given(st.lists(st.integers(-50, 50), min_size=1, max_size=4).filter(lambda v: any(v)))
def test_primitivize_idempotent(coords):
    once = primitivize(tuple(coords))
    assert primitivize(once) == once


def test_solve_identity():
    a = RationalMatrix.identity(2)
    assert solve_linear(a, [Fraction(1, 2), -3]) == (Fraction(1, 2), Fraction(-3))


def test_solve_homogeneous_nonsingular():
    a = RationalMatrix.from_rows([[-2, 1], [1, -2]])
    assert solve_linear(a, [0, 0]) == (Fraction(0), Fraction(0))


def test_solve_single_minus_three_curve():
    # -3 e = -1, so e = 1/3; hand substitution: -3 * 1/3 == -1.
    a = RationalMatrix.from_rows([[-3]])
    (e,) = solve_linear(a, [-1])
    assert e == Fraction(1, 3)
    assert a.mul_vector([e]) == (Fraction(-1),)


def test_solve_inconsistent():
    a = RationalMatrix.from_rows([[1, 1], [1, 1]])
    with pytest.raises(NoSolutionError):
        solve_linear(a, [1, 2])


def test_solve_underdetermined_carries_kernel_witness():
    a = RationalMatrix.from_rows([[1, 1]])
    with pytest.raises(UnderdeterminedError) as exc:
        solve_linear(a, [1])
    witness = exc.value.kernel_witness
    assert witness != (0, 0)
    assert a.mul_vector(witness) == (Fraction(0),)


@given(
    st.lists(
        st.lists(st.integers(-6, 6), min_size=3, max_size=3),
        min_size=3,
        max_size=3,
    ),
    st.lists(st.integers(-6, 6), min_size=3, max_size=3),
)
def test_solution_substitutes_back(rows, rhs):
    a = RationalMatrix.from_rows(rows)
    try:
        x = solve_linear(a, rhs)
    except (NoSolutionError, UnderdeterminedError):
        return
    assert a.mul_vector(x) == tuple(Fraction(v) for v in rhs)


def test_negative_definite_examples():
    assert is_negative_definite(RationalMatrix.from_rows([[-1]]))
    assert is_negative_definite(RationalMatrix.from_rows([[-2, 1], [1, -2]]))
    assert not is_negative_definite(RationalMatrix.from_rows([[1]]))


def test_negative_definite_requires_symmetry():
    with pytest.raises(ValueError):
        is_negative_definite(RationalMatrix.from_rows([[1, 2], [3, 4]]))


def test_negative_definite_against_sympy_oracle():
    sympy = pytest.importorskip("sympy")
    cases = [
        [[-2, 1, 0], [1, -2, 1], [0, 1, -2]],
        [[-2, 1, 0], [1, -2, 2], [0, 2, -2]],
        [[-1, 0], [0, -5]],
        [[-1, 2], [2, -1]],
        [[0, 0], [0, -1]],
    ]
    for rows in cases:
        expected = sympy.Matrix(rows).is_negative_definite
        assert is_negative_definite(RationalMatrix.from_rows(rows)) == expected


def test_determinant_basics():
    assert determinant(RationalMatrix.from_rows([[-2, 1], [1, -2]])) == 3
    assert determinant(RationalMatrix.identity(3)) == 1
    assert determinant(RationalMatrix.from_rows([[1, 2], [2, 4]])) == 0


def test_smith_diagonal_and_lattice_index():
    assert sorted(smith_diagonal([[2, 0], [0, 3]])) == [2, 3]
    assert lattice_index([[1, 0], [0, 1]]) == 1
    assert lattice_index([[1, 0], [1, 2]]) == 2
    assert lattice_index([[2, 4]]) == 2


def test_integer_kernel_basis():
    kernel = integer_kernel_basis([[1, 1, 1]])
    assert len(kernel) == 2
    for v in kernel:
        assert sum(v) == 0
    # The kernel lattice must contain (1, -1, 0) exactly, not only 2*(1,-1,0).
    span = {tuple(a * k1 + b * k2 for k1, k2 in zip(*kernel)) for a in range(-3, 4) for b in range(-3, 4)}
    assert (1, -1, 0) in span


def test_nonneg_combination_and_cone_membership():
    gens = [(1, 0), (1, 1)]
    lam = nonneg_combination(gens, (3, 1))
    assert lam is not None
    assert lam[0] * 1 + lam[1] * 1 == 3 and lam[1] == 1
    assert in_cone(gens, (0, 1)) is False
    assert in_cone(gens, (2, 1)) is True


def test_nontrivial_nonneg_relation_detects_lines():
    assert has_nontrivial_nonneg_relation([(1, 0), (-1, 0)])
    assert not has_nontrivial_nonneg_relation([(1, 0), (0, 1)])
    assert has_nontrivial_nonneg_relation([(1, 0), (0, 1), (-1, -1)])

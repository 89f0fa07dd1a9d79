import itertools

import numpy as np
import pytest

from hodgecalc.fp import (
    FieldMismatchError,
    FpMatrix,
    FpScalar,
    kernel_basis,
    rank,
    rref,
    solve,
    subquotient_dim,
)


def enumerate_matrices(p, rows, cols, limit=400):
    # every matrix for tiny shapes, a fixed stride through the rest otherwise
    total = p ** (rows * cols)
    step = max(1, total // limit)
    for code in range(0, total, step):
        entries = []
        c = code
        for _ in range(rows * cols):
            entries.append(c % p)
            c //= p
        yield FpMatrix(np.array(entries).reshape(rows, cols), p)


def test_rref_identity():
    m = FpMatrix.identity(3, 3)
    red, piv = rref(m)
    assert red == m
    assert piv == [0, 1, 2]


def test_rref_zero():
    m = FpMatrix.zeros(2, 2, 5)
    red, piv = rref(m)
    assert red.is_zero()
    assert piv == []


def test_rref_dependent_rows():
    red, piv = rref(FpMatrix([[1, 2], [2, 4]], 5))
    assert red.tolist() == [[1, 2], [0, 0]]
    assert piv == [0]


def test_rref_scales_pivot():
    red, piv = rref(FpMatrix([[0, 3, 1], [2, 1, 0]], 5))
    assert piv == [0, 1]
    assert red.tolist() == [[1, 0, 4], [0, 1, 2]]


def test_kernel_f2():
    k = kernel_basis(FpMatrix([[1, 1]], 2))
    assert k.tolist() == [[1], [1]]


def test_kernel_invertible_and_zero():
    assert kernel_basis(FpMatrix([[1, 2], [3, 4]], 7)).cols == 0
    k = kernel_basis(FpMatrix.zeros(3, 3, 5))
    assert k == FpMatrix.identity(3, 5)


def test_subquotient_examples():
    assert subquotient_dim(FpMatrix.identity(2, 3), FpMatrix.zeros(2, 1, 3)) == 2
    a = FpMatrix([[1, 0], [1, 1]], 3)
    assert subquotient_dim(a, a) == 0
    assert subquotient_dim(FpMatrix([[1], [0]], 2), FpMatrix([[0], [1]], 2)) == 1


@pytest.mark.parametrize("p,shape", [(2, (3, 3)), (3, (2, 3)), (5, (3, 2)), (7, (2, 2))])
def test_rank_nullity_and_kernel(p, shape):
    for m in enumerate_matrices(p, *shape):
        k = kernel_basis(m)
        assert rank(m) + k.cols == m.cols
        assert (m @ k).is_zero()
        red, _ = rref(m)
        assert rref(red)[0] == red


def test_rank_transposed_agrees():
    for m in enumerate_matrices(3, 2, 4):
        assert rank(m) == rank(m.T)


def test_solve():
    m = FpMatrix([[1, 1], [0, 1]], 5)
    x = solve(m, [3, 4])
    assert ((m.data @ x) % 5).tolist() == [3, 4]
    assert solve(FpMatrix([[1, 1], [1, 1]], 5), [1, 2]) is None


def test_scalar_arithmetic():
    a = FpScalar(3, 5)
    assert (a * a).value == 4
    assert (a.inverse() * a).value == 1
    assert (a + 4).value == 2
    with pytest.raises(ZeroDivisionError):
        FpScalar(0, 5).inverse()
    with pytest.raises(FieldMismatchError):
        a + FpScalar(1, 3)


def test_field_mismatch_matrix():
    with pytest.raises(FieldMismatchError):
        FpMatrix.identity(2, 3) @ FpMatrix.identity(2, 5)


def test_large_inner_dimension_no_overflow():
    p = 7
    a = np.full((1, 40), 6)
    m = FpMatrix(a, p) @ FpMatrix(a.T, p)
    assert m.tolist() == [[(36 * 40) % 7]]


def test_enumeration_covers_f2_small():
    seen = {m for m in enumerate_matrices(2, 1, 2)}
    assert len(seen) == 4
    assert all(isinstance(x, FpMatrix) for x in itertools.islice(seen, 2))

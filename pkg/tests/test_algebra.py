import itertools

import numpy as np
import pytest

from hodgecalc.algebra import (
    AlgebraError,
    HopfAxiomError,
    HopfData,
    Hypersurface,
    NotAUnitError,
    PresentedAlgebra,
    adapted,
    adjoint_coaction_trivial,
    all_units,
    alpha_p_functions,
    as_truncated_poly,
    cartier_dual,
    frobenius_on_algebra,
    is_semisimple,
    kaehler_and_dlog,
    local_factor,
    lci_cotangent,
    mu_p_functions,
    nilradical,
    tensor,
    truncated_poly,
)
from hodgecalc.fp import rank, FpMatrix


def test_truncated_poly_p3():
    a = truncated_poly(3, 3, 1)
    assert a.dim == 3
    t, t2 = a.basis(1), a.basis(2)
    assert not a.mul(t, t2).any()
    assert a.weights == (0, 1, 2)


def test_truncated_poly_ground_field():
    a = truncated_poly(2, 1, 0)
    assert a.dim == 1 and a.labels == ("1",)


def test_truncated_poly_p5_rules():
    a = truncated_poly(5, 5, 1)
    assert not a.mul(a.basis(2), a.basis(3)).any()
    assert a.mul(a.basis(1), a.basis(3)).tolist() == a.basis(4).tolist()


def test_bad_weights_rejected():
    a = truncated_poly(3, 3, 1)
    with pytest.raises(AlgebraError):
        PresentedAlgebra(3, a.labels, (0, 1, 1), a.mult, a.unit, a.augmentation)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_hopf_constructors_satisfy_axioms(p):
    for h in (alpha_p_functions(p), mu_p_functions(p)):
        assert h.hopf is not None
        assert adjoint_coaction_trivial(h)


def test_broken_antipode_rejected():
    h = alpha_p_functions(3)
    bad = HopfData(h.hopf.comult, h.hopf.counit, np.eye(3, dtype=np.int64))
    with pytest.raises(HopfAxiomError):
        PresentedAlgebra(3, h.labels, h.weights, h.mult, h.unit, h.augmentation, bad)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_dual_of_alpha_is_truncated_poly(p):
    d = cartier_dual(alpha_p_functions(p))
    assert d.weights[1] == -1
    info = as_truncated_poly(d)
    assert info is not None
    n, idx, w = info
    assert (n, w) == (p, -1)
    assert not is_semisimple(d)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_dual_of_mu_is_split_semisimple(p):
    d = cartier_dual(mu_p_functions(p))
    assert is_semisimple(d)
    # the dual basis vectors are p orthogonal idempotents
    for i, j in itertools.product(range(p), repeat=2):
        expected = d.basis(i) if i == j else np.zeros(p, dtype=np.int64)
        assert d.mul(d.basis(i), d.basis(j)).tolist() == expected.tolist()


@pytest.mark.parametrize("p", [2, 3])
def test_double_dual(p):
    for h in (alpha_p_functions(p), mu_p_functions(p)):
        dd = cartier_dual(cartier_dual(h))
        assert np.array_equal(dd.mult, h.mult)
        assert np.array_equal(dd.hopf.comult, h.hopf.comult)
        assert dd.weights == h.weights


def test_adapted_basis_for_mu_dual():
    d = adapted(cartier_dual(mu_p_functions(3)))
    assert d.is_adapted()
    assert d.augmentation.tolist() == [1, 0, 0]


def test_tensor_of_hopf_algebras():
    h = tensor(mu_p_functions(2), mu_p_functions(2))
    assert h.dim == 4 and h.hopf is not None
    assert is_semisimple(cartier_dual(h))


def test_cotangent_alpha():
    for p in (2, 3, 5):
        cot = lci_cotangent(Hypersurface(p, (0,) * p + (1,), weight_of_t=1))
        assert cot.colie_cohomology() == {-1: (1, p), 0: (1, 1)}


def test_cotangent_mu():
    for p in (2, 3, 5):
        f = (p - 1,) + (0,) * (p - 1) + (1,)  # t^p - 1
        cot = lci_cotangent(Hypersurface(p, f, point=1))
        assert cot.colie().is_zero()
        assert cot.colie_cohomology() == {-1: (1, 0), 0: (1, 0)}


def test_cotangent_smooth_point():
    # t^2 - t over F_3: f' = 2t - 1 squares to 1, so multiplication is invertible
    cot = lci_cotangent(Hypersurface(3, (0, -1, 1)))
    assert cot.cohomology_dims() == {-1: 0, 0: 0}
    assert cot.colie_cohomology()[-1][0] == 0


def test_dlog_examples():
    pres = Hypersurface(2, (0, 0, 1))
    assert kaehler_and_dlog(pres, [1, 1]).rep.tolist() == [1, 1]
    assert kaehler_and_dlog(pres, [1, 0]).is_zero()
    with pytest.raises(NotAUnitError):
        kaehler_and_dlog(pres, [0, 1])


@pytest.mark.parametrize("pres", [
    Hypersurface(2, (0, 0, 1)),
    Hypersurface(3, (0, 0, 0, 1)),
    Hypersurface(3, (0, 0, 1)),
    Hypersurface(5, (0, 0, 1)),
    Hypersurface(3, (2, 0, 0, 1), point=1),
])
def test_dlog_additive_on_all_unit_pairs(pres):
    a = pres.algebra()
    units = all_units(a)
    for u, v in itertools.product(units, repeat=2):
        lhs = kaehler_and_dlog(pres, a.mul(u, v))
        rhs = kaehler_and_dlog(pres, u) + kaehler_and_dlog(pres, v)
        assert lhs == rhs


def test_frobenius_examples():
    for p in (2, 3, 5):
        a = truncated_poly(p, p, 1)
        F = frobenius_on_algebra(a)
        assert F.column(0).tolist() == a.unit.tolist()
        assert rank(F) == 1
        big = truncated_poly(p, p * p, 1)
        assert frobenius_on_algebra(big).column(1).tolist() == big.basis(p).tolist()
    k = truncated_poly(3, 1)
    assert frobenius_on_algebra(k) == FpMatrix.identity(1, 3)


@pytest.mark.parametrize("a", [
    truncated_poly(2, 4, 1),
    truncated_poly(3, 5, 1),
    mu_p_functions(3),
    cartier_dual(mu_p_functions(3)),
    cartier_dual(alpha_p_functions(3)),
    Hypersurface(5, (1, 0, 1), point=2).algebra(),
])
def test_frobenius_multiplicative(a):
    F = frobenius_on_algebra(a)
    for i, j in itertools.product(range(a.dim), repeat=2):
        lhs = F.data @ a.mul(a.basis(i), a.basis(j)) % a.p
        rhs = a.mul(F.column(i), F.column(j))
        assert lhs.tolist() == rhs.tolist()


def test_nilradical_dimension():
    assert nilradical(truncated_poly(3, 4, 1)).cols == 3
    assert nilradical(mu_p_functions(3)).cols == 2  # x - 1 is nilpotent in char 3


def test_local_factor():
    assert local_factor(cartier_dual(mu_p_functions(3))).dim == 1
    a = cartier_dual(alpha_p_functions(3))
    assert local_factor(a) is a
    mixed = local_factor(cartier_dual(tensor(mu_p_functions(3), alpha_p_functions(3))))
    assert mixed.dim == 3 and sorted(mixed.weights) == [-2, -1, 0]
    assert mixed.epsilon(mixed.unit) == 1

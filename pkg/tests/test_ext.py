import itertools

import numpy as np
import pytest

from hodgecalc.algebra import (
    adapted,
    alpha_p_functions,
    cartier_dual,
    mu_p_functions,
    truncated_poly,
)
from hodgecalc.ext import (
    BarResolution,
    ExtRing,
    KernelResolution,
    LiftingError,
    PeriodicResolution,
    ResourceError,
    bar_resolution_oracle,
    ext_dims,
    ext_ring,
    periodic_resolution,
)


def dual_alpha(p):
    return cartier_dual(alpha_p_functions(p))


def test_periodic_n3_p3_exact():
    a = truncated_poly(3, 3, -1)
    res = periodic_resolution(a, 11)
    assert res.check_exact(10)
    s, s2 = a.basis(1), a.basis(2)
    for n in range(1, 11):
        expected = s if n % 2 else s2
        assert res.boundary(n, 0)[0].tolist() == expected.tolist()


def test_periodic_n1_is_ground_field():
    res = periodic_resolution(truncated_poly(3, 1), 5)
    assert [res.rank(n) for n in range(4)] == [1, 0, 0, 0]
    assert ext_dims(res, 4) == {(0, 0): 1}


def test_periodic_n2_p2_alternates_s():
    a = truncated_poly(2, 2, -1)
    res = periodic_resolution(a, 6)
    assert all(res.boundary(n, 0)[0].tolist() == [0, 1] for n in range(1, 7))
    assert res.check_exact(5)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_ext_dims_and_weights(p):
    ring = ext_ring(dual_alpha(p), 10)
    dims = ring.dims()
    assert sorted(n for n, _ in dims) == list(range(11))
    assert all(v == 1 for v in dims.values())
    assert dims[(1, 1)] == 1 and dims[(2, p)] == 1


def test_ext_p3_exterior_times_polynomial():
    ring = ext_ring(dual_alpha(3), 10)
    kinds = [(g.degree, g.weight, g.kind) for g in ring.generators]
    assert kinds == [(1, 1, "exterior"), (2, 3, "polynomial")]
    alpha, beta = ring.generators
    assert not ring.mul_vectors(1, alpha.vector, 1, alpha.vector).any()
    assert ring.mul_vectors(1, alpha.vector, 2, beta.vector).any()
    for k in range(2, 6):
        assert ring.power(2, beta.vector, k)[1].any()


def test_ext_p2_polynomial_alpha():
    ring = ext_ring(dual_alpha(2), 10)
    assert len(ring.generators) == 1
    alpha = ring.generators[0]
    assert alpha.kind == "polynomial" and alpha.weight == 1
    assert ring.mul_vectors(1, alpha.vector, 1, alpha.vector).any()


@pytest.mark.parametrize("p", [2, 3, 5])
def test_bar_oracle_agrees(p):
    a = adapted(dual_alpha(p))
    bar = bar_resolution_oracle(a, 7)
    assert ext_dims(bar, 6) == ext_dims(PeriodicResolution(a, 8), 6)


def test_bar_over_s_cubed():
    a = truncated_poly(3, 3, -1)
    assert ext_dims(bar_resolution_oracle(a, 7), 6) == ext_dims(periodic_resolution(a, 8), 6)


def test_bar_exact_small():
    bar = BarResolution(truncated_poly(3, 3, -1), 4)
    assert bar.check_exact(4)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_semisimple_dual_concentrated_in_degree_zero(p):
    d = adapted(cartier_dual(mu_p_functions(p)))
    assert ext_ring(d, 6).dims() == {(0, 0): 1}
    assert ext_dims(bar_resolution_oracle(d, 5), 4) == {(0, 0): 1}


def test_bar_over_ground_field():
    bar = BarResolution(truncated_poly(5, 1), 6)
    assert [bar.rank(n) for n in range(4)] == [1, 0, 0, 0]
    assert ext_dims(bar, 5) == {(0, 0): 1}


def test_bar_budget():
    with pytest.raises(ResourceError):
        bar_resolution_oracle(truncated_poly(5, 5, 1), 9)
    with pytest.raises(ResourceError):
        BarResolution(truncated_poly(5, 5, 1), 8, budget=1000)


def test_kernel_resolution_matches_periodic():
    a = adapted(dual_alpha(3))
    kr = KernelResolution(a, 7)
    assert kr.check_exact(6)
    assert ext_dims(kr, 6) == ext_dims(PeriodicResolution(a, 8), 6)


def test_kernel_resolution_on_tensor_algebra():
    # Ext over k[s]/(s^2) (x) k[s]/(s^2) at p=2 has dimension n+1 in degree n
    from hodgecalc.algebra import tensor
    a = adapted(cartier_dual(tensor(alpha_p_functions(2), alpha_p_functions(2))))
    ring = ExtRing(KernelResolution(a, 6), 4)
    assert [ring.dim(n) for n in range(5)] == [1, 2, 3, 4, 5]


@pytest.mark.parametrize("p", [2, 3])
def test_graded_commutative_and_weight_additive(p):
    ring = ext_ring(dual_alpha(p), 6)
    for a, b in itertools.product(range(1, 4), repeat=2):
        for i, j in itertools.product(range(ring.dim(a)), range(ring.dim(b))):
            xy = ring.mul(a, i, b, j)
            yx = ring.mul(b, j, a, i)
            sign = (-1) ** (a * b)
            assert xy.tolist() == (sign * yx % p).tolist()
            for k in np.flatnonzero(xy):
                assert ring.basis_weights[a + b][k] == ring.basis_weights[a][i] + ring.basis_weights[b][j]


def test_associative_on_window():
    ring = ext_ring(dual_alpha(3), 6)
    e = lambda n: np.ones(ring.dim(n), dtype=np.int64)
    for a, b, c in [(1, 1, 2), (1, 2, 2), (2, 1, 1), (2, 2, 2)]:
        left = ring.mul_vectors(a + b, ring.mul_vectors(a, e(a), b, e(b)), c, e(c))
        right = ring.mul_vectors(a, e(a), b + c, ring.mul_vectors(b, e(b), c, e(c)))
        assert left.tolist() == right.tolist()


def test_lifting_beyond_resolution_names_degree():
    a = truncated_poly(3, 3, -1)
    ring = ExtRing(PeriodicResolution(a, 4), 3)
    with pytest.raises(LiftingError) as err:
        ring.lift(2, ring.basis[2][:, 0], 3)
    assert err.value.degree == 5


def test_product_outside_window_rejected():
    ring = ext_ring(dual_alpha(3), 4)
    with pytest.raises(ValueError):
        ring.product(2, ring.basis[2][:, 0], 3, ring.basis[3][:, 0])

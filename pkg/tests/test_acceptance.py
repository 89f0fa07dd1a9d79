"""End-to-end acceptance checks; each test carries its criterion number.

The conftest hook prints one PASS/FAIL line per criterion after the run.
"""
import itertools

import numpy as np
import pytest

from hodgecalc.algebra import (
    Hypersurface,
    adapted,
    all_units,
    alpha_p_functions,
    cartier_dual,
    frobenius_on_algebra,
    kaehler_and_dlog,
    mu_p_functions,
    truncated_poly,
)
from hodgecalc.ext import PeriodicResolution, bar_resolution_oracle, ext_dims, ext_ring
from hodgecalc.fp import FpMatrix, kernel_basis, rank
from hodgecalc.graded import GradedSpace, Window, kunneth
from hodgecalc.hochschild import B_on_homology, BarComplex, hochschild_bar, hochschild_small
from hodgecalc.spectral import (
    AbutmentSpec,
    ExpandedPage,
    admissible_differentials,
    expand_page,
    forced_search,
    replay,
    tate_page,
)
from hodgecalc.stacks import (
    alpha,
    conjugate_page,
    crys_BG,
    derham_BG,
    dr_hp_abutment,
    dr_hp_page,
    hkr_abutment,
    hkr_page,
    hodge_BG,
    mod_p_defect,
    mu,
    pgl_omega1,
    product,
    tp_accounting,
)

P23 = [2, 3]
P235 = [2, 3, pytest.param(5, marks=pytest.mark.slow)]


def dual_alpha(p):
    return cartier_dual(alpha_p_functions(p))


# 1 ---------------------------------------------------------------------------

@pytest.mark.criterion(1)
@pytest.mark.parametrize("p", P235)
def test_ext_dual_alpha_dims_and_weights(p):
    ring = ext_ring(dual_alpha(p), 10)
    dims = ring.dims()
    assert {n: sum(d for (m, _), d in dims.items() if m == n) for n in range(11)} == {n: 1 for n in range(11)}
    assert dims[(1, 1)] == 1 and dims[(2, p)] == 1


@pytest.mark.criterion(1)
def test_ext_p3_exterior_alpha_polynomial_beta():
    ring = ext_ring(dual_alpha(3), 10)
    assert [(g.degree, g.weight, g.kind) for g in ring.generators] == [(1, 1, "exterior"), (2, 3, "polynomial")]
    a, b = ring.generators
    assert not ring.mul_vectors(1, a.vector, 1, a.vector).any()
    for k in range(1, 6):
        assert ring.power(2, b.vector, k)[1].any()


@pytest.mark.criterion(1)
def test_ext_p2_alpha_squares_nonzero():
    ring = ext_ring(dual_alpha(2), 10)
    (a,) = ring.generators
    assert (a.degree, a.weight, a.kind) == (1, 1, "polynomial")
    assert ring.mul_vectors(1, a.vector, 1, a.vector).any()


@pytest.mark.criterion(1)
@pytest.mark.parametrize("p", P235)
def test_ext_bar_oracle_through_degree_six(p):
    a = adapted(dual_alpha(p))
    assert ext_dims(bar_resolution_oracle(a, 7), 6) == ext_dims(PeriodicResolution(a, 8), 6)


# 2 ---------------------------------------------------------------------------

@pytest.mark.criterion(2)
@pytest.mark.parametrize("p,n", [(2, 2), (3, 3), (3, 2), pytest.param(5, 5, marks=pytest.mark.slow)])
def test_hochschild_models_agree(p, n):
    a = truncated_poly(p, n, 1)
    bar, small = hochschild_bar(a, 6), hochschild_small(a, 6)
    assert bar.weight_table() == small.weight_table()
    if n == p:
        assert bar.degree_dims() == {k: p for k in range(7)}


# 3 ---------------------------------------------------------------------------

@pytest.mark.criterion(3)
@pytest.mark.parametrize("p", [2, 3, 5])
def test_hodge_mu(p):
    h = hodge_BG(mu(p), 8)
    for s, t in itertools.product(range(9), repeat=2):
        assert h.dim(s, t) == (1 if t - s in (0, 1) else 0), (s, t)


# 4 ---------------------------------------------------------------------------

def _monomial_count(gens, s, t):
    ranges = [range(2) if kind == "exterior" else range(s + t + 1) for *_, kind in gens]
    return sum(1 for e in itertools.product(*ranges)
               if sum(x * g[0] for x, g in zip(e, gens)) == s and sum(x * g[1] for x, g in zip(e, gens)) == t)


@pytest.mark.criterion(4)
def test_hodge_alpha3():
    gens = [(1, 0, 1, "exterior"), (2, 0, 3, "polynomial"), (0, 1, 3, "exterior"), (1, 1, 1, "polynomial")]
    h = hodge_BG(alpha(3), 8)
    assert [(g.s, g.t, g.weight, g.kind) for g in h.generators] == gens
    for s, t in itertools.product(range(9), repeat=2):
        assert h.dim(s, t) == _monomial_count(gens, s, t), (s, t)
    assert h.dim(1, 1) == 2


# 5 ---------------------------------------------------------------------------

@pytest.mark.criterion(5)
@pytest.mark.parametrize("p", P235)
def test_forced_hkr_mu(p):
    pres, r_max = hkr_page(mu(p))
    rep = forced_search(pres, hkr_abutment(mu(p)), r_max)
    assert rep.unique
    (d,) = rep.patterns[0].differentials
    assert (d.r, d.source, d.target) == (p, "d", f"c^{p}")
    dims = rep.patterns[0].e_infinity.degree_dims()
    assert dims == {n: (p if n == 0 else 0) for n in range(-6, 7)}


# 6 ---------------------------------------------------------------------------

@pytest.mark.criterion(6)
def test_forced_hkr_alpha3():
    pres, r_max = hkr_page(alpha(3))
    for r in range(2, r_max + 3):
        assert all(src != "u" for src, _ in admissible_differentials(pres, r))
    rep = forced_search(pres, hkr_abutment(alpha(3)), r_max)
    assert rep.unique
    assert [d.label() for d in rep.patterns[0].differentials] == ["d3(s) = u^3"]
    dims = rep.patterns[0].e_infinity.degree_dims()
    assert all(dims[n] == 3 for n in range(7))


# 7 ---------------------------------------------------------------------------

@pytest.mark.criterion(7)
@pytest.mark.parametrize("p", P235)
def test_hodge_derham_alpha(p):
    dr = derham_BG(alpha(p), 8)
    assert [d.label() for d in dr.search.patterns[0].differentials] == ["d1(alpha) = u"]
    assert dr.search.unique
    assert all(dr.degree_dims()[n] == 1 for n in range(9))
    assert all(g.weight % p == 0 for g in dr.space.grades())


@pytest.mark.criterion(7)
@pytest.mark.parametrize("p", [3, 5])
def test_conjugate_route_agrees(p):
    dims = {n: 1 for n in range(9)}
    rep = forced_search(conjugate_page(alpha(p), 8), AbutmentSpec(degrees=tuple(dims), dims=dims), 3)
    assert rep.unique
    assert [d.label() for d in rep.patterns[0].differentials] == ["d2(s) = beta"]
    got = rep.patterns[0].degree_dims
    assert {n: got[n] for n in dims} == derham_BG(alpha(p), 8).degree_dims()


# 8 ---------------------------------------------------------------------------

@pytest.mark.criterion(8)
@pytest.mark.parametrize("p", P235)
def test_derham_hp_mu(p):
    pres = dr_hp_page(mu(p))
    assert "c" in pres.permanent
    rep = forced_search(pres, dr_hp_abutment(mu(p)), p)
    assert rep.unique
    (d,) = rep.patterns[0].differentials
    assert (d.r, d.source, d.target) == (p, "d", f"c^{p}")
    # periodic: degree 0 stands for every even degree, 1 for every odd one
    assert rep.patterns[0].degree_dims == {0: p, 1: 0}


@pytest.mark.criterion(8)
@pytest.mark.parametrize("p", [2, 3, 5])
def test_derham_hp_alpha_degenerates(p):
    pres = dr_hp_page(alpha(p))
    assert all(admissible_differentials(pres, r) == [] for r in range(2, 12))


# 9 ---------------------------------------------------------------------------

@pytest.mark.criterion(9)
@pytest.mark.parametrize("p", [2, 3, 5])
def test_crys_mu(p):
    crys = crys_BG(mu(p), m=3, n_max=8)
    assert crys[0].describe(p) == f"Z/{p}^3"
    assert [crys[n].invariant_factors() for n in range(1, 9)] == [(), (1,), (), (1,), (), (1,), (), (1,)]


@pytest.mark.criterion(9)
@pytest.mark.parametrize("p", P23)
def test_crys_mod_p_identity(p):
    for G in (mu(p), alpha(p), product(mu(p), mu(p))):
        assert mod_p_defect(G, 3, 8) == {}


@pytest.mark.criterion(9)
@pytest.mark.parametrize("p", P23)
def test_tp_accounting_verdicts(p):
    rep = tp_accounting(mu(p))
    assert rep.degenerate and rep.split is False
    G = product(mu(p), mu(p))
    assert crys_BG(G, m=3, n_max=6)[3].invariant_factors() == (1,)
    assert not tp_accounting(G).degenerate


@pytest.mark.criterion(9)
@pytest.mark.parametrize("p", [2, 3, 5])
def test_crys_alpha(p):
    crys = crys_BG(alpha(p), m=3, n_max=8)
    for n in range(1, 9):
        assert crys[n].invariant_factors() == ((1,) if n % 2 == 0 else ())


# 10 --------------------------------------------------------------------------

@pytest.mark.criterion(10)
@pytest.mark.parametrize("p", P23)
def test_tate_d2(p):
    hh = hochschild_bar(truncated_poly(p, p, 1), 3, representatives=True)
    m = B_on_homology(hh, 0, 1)
    assert hh.dims[(1, 1)] == 1 and not m.is_zero()
    tp = tate_page(hh)
    assert not tp.d2[(0, 1)].is_zero()


@pytest.mark.criterion(10)
@pytest.mark.parametrize("p", P23)
def test_tate_zero_for_degree_zero_hh(p):
    for a in (truncated_poly(p, 1), cartier_dual(mu_p_functions(p))):
        hh = hochschild_bar(a, 3, representatives=True)
        assert {n for (n, w), d in hh.dims.items() if d} == {0}
        assert tate_page(hh).is_degenerate()


# 11 --------------------------------------------------------------------------

@pytest.mark.criterion(11)
@pytest.mark.parametrize("p", [2, 3, 5])
def test_pgl_omega1(p):
    for n in (p, p + 1, 2 * p, 2 * p + 1):
        h = pgl_omega1(n, p)
        want = 1 if n % p == 0 else 0
        assert (h.degree_dim(1), h.degree_dim(2)) == (want, want), n


# 12 --------------------------------------------------------------------------

def _matrices(p, rows, cols, limit=300):
    total = p ** (rows * cols)
    for code in range(0, total, max(1, total // limit)):
        digits = [(code // p ** i) % p for i in range(rows * cols)]
        yield FpMatrix(np.array(digits).reshape(rows, cols), p)


@pytest.mark.criterion(12)
@pytest.mark.parametrize("p", [2, 3, 5])
def test_property_square_zero(p):
    for a in (truncated_poly(p, p, 1), truncated_poly(p, 2, 1), cartier_dual(mu_p_functions(p))):
        assert BarComplex(a, 4).check_identities(3)
    assert PeriodicResolution(adapted(dual_alpha(p)), 8).check_exact(7)
    for n in (p, p + 1):
        pgl_omega1(n, p)  # builds a mapping fiber, which checks d^2 = 0
    for G in (mu(p), alpha(p)):
        pres, r_max = hkr_page(G)
        rep = forced_search(pres, hkr_abutment(G), r_max)
        replay(pres, rep.patterns[0].differentials, r_max)  # strict: raises on d^2 != 0


@pytest.mark.criterion(12)
@pytest.mark.parametrize("p", P23)
def test_property_leibniz(p):
    for pres in (hkr_page(mu(p))[0], hkr_page(alpha(p))[0], conjugate_page(alpha(p), 6)):
        page = ExpandedPage(pres)
        for r in range(pres.r, pres.r + p + 1):
            for name, tgt in admissible_differentials(pres, r):
                assert page.leibniz_defect(r, {name: (tgt, 1)}) == []


@pytest.mark.criterion(12)
@pytest.mark.parametrize("p,shape", [(2, (3, 3)), (3, (2, 3)), (5, (3, 2))])
def test_property_rank_nullity(p, shape):
    for m in _matrices(p, *shape):
        k = kernel_basis(m)
        assert rank(m) + k.cols == m.cols
        assert (m @ k).is_zero()


@pytest.mark.criterion(12)
def test_property_kunneth_convolution():
    for p in (2, 3):
        a, b = hodge_BG(mu(p), 5).table(), hodge_BG(alpha(p), 5).table()
        conv = kunneth(a, b)
        expected = {}
        for (ga, da), (gb, db) in itertools.product(a.dims_table().items(), b.dims_table().items()):
            g = ga + gb
            if g.deg <= conv.window.deg_max:
                expected[g] = expected.get(g, 0) + da * db
        assert conv.dims_table() == expected
    x = GradedSpace.from_dims({(0, 0, 0): 1, (1, 1, 2): 2}, Window(0, 4))
    assert kunneth(x, x).dims_table()[(2, 2, 4)] == 4


@pytest.mark.criterion(12)
@pytest.mark.parametrize("p", P23)
def test_property_weight_zero(p):
    bar = BarComplex(truncated_poly(p, p, 1), 3)
    for n in range(3):
        r, c, _ = bar.B_coo(n)
        assert (bar.weights(n + 1)[r] == bar.weights(n)[c]).all()
        r, c, _ = bar.b_coo(n + 1)
        assert (bar.weights(n)[r] == bar.weights(n + 1)[c]).all()
    for G in (mu(p), alpha(p)):
        pres, _ = hkr_page(G)
        page = ExpandedPage(pres)
        for r in range(pres.r, pres.r + p + 1):
            for name, tgt in admissible_differentials(pres, r):
                p2 = pres.with_differentials(r, {name: (tgt, 1)})
                for key in expand_page(p2)[1]:
                    assert page.shift(key, r)[2] == key[2]


@pytest.mark.criterion(12)
@pytest.mark.parametrize("a", [truncated_poly(2, 4, 1), truncated_poly(3, 5, 1), mu_p_functions(3),
                               cartier_dual(alpha_p_functions(5))])
def test_property_frobenius_multiplicative(a):
    F = frobenius_on_algebra(a)
    for i, j in itertools.product(range(a.dim), repeat=2):
        lhs = F.data @ a.mul(a.basis(i), a.basis(j)) % a.p
        assert lhs.tolist() == a.mul(F.column(i), F.column(j)).tolist()


@pytest.mark.criterion(12)
@pytest.mark.parametrize("pres", [Hypersurface(2, (0, 0, 1)), Hypersurface(3, (0, 0, 0, 1)),
                                  Hypersurface(5, (0, 0, 1))])
def test_property_dlog_additive(pres):
    a = pres.algebra()
    units = all_units(a)
    for u, v in itertools.product(units, repeat=2):
        assert kaehler_and_dlog(pres, a.mul(u, v)) == kaehler_and_dlog(pres, u) + kaehler_and_dlog(pres, v)

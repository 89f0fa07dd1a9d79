import itertools

import pytest

from hodgecalc.algebra import cartier_dual, mu_p_functions, truncated_poly
from hodgecalc.ext import ResourceError
from hodgecalc.hochschild import hochschild_bar
from hodgecalc.spectral import (
    AbutmentSpec,
    AbutmentUnreachable,
    DifferentialSquareError,
    ExpandedPage,
    Generator,
    PageError,
    PagePresentation,
    PageState,
    admissible_differentials,
    attainable_degrees,
    expand_page,
    forced_search,
    replay,
    tate_page,
    turn,
    turn_page,
)
from hodgecalc.stacks import (
    alpha,
    conjugate_page,
    dr_hp_abutment,
    dr_hp_page,
    hkr_abutment,
    hkr_page,
    mu,
)


def mu_hkr(p, bound=12, **kw):
    gens = (Generator("d", 0, -1, 0, "exterior"), Generator("c", 1, -1, 0, "polynomial"))
    return PagePresentation(p, gens, kw.pop("r", 2), bound, **kw)


def test_mu_page_counts_without_differentials():
    space, mats = expand_page(mu_hkr(3, bound=6))
    assert mats == {}
    dims = space.degree_dims()
    assert dims[0] == 7 and dims[-1] == 7  # c^a and d c^a for a = 0..6


def test_d_to_c_p_matrix():
    p = 3
    pres = mu_hkr(p, bound=8, r=p, differentials={"d": (f"c^{p}", 1)})
    page = ExpandedPage(pres)
    _, mats = expand_page(pres)
    for a in range(0, 8 - p + 1):
        src = (1, a)
        key = page.key_of(src)
        tgt = page.shift(key, p)
        col = page.local[key][src]
        row = page.local[tgt][(0, a + p)]
        assert mats[key].data[row, col] == 1


def test_empty_generator_list_is_ground_field():
    space, mats = expand_page(PagePresentation(3, (), 2, 4))
    assert space.total_dim() == 1 and mats == {}


def test_zero_differential_leaves_table():
    pres = mu_hkr(5, bound=10)
    page = ExpandedPage(pres)
    _, table = turn_page(pres)
    assert table == {k: len(v) for k, v in page.cells.items()}


def test_wrong_bidegree_names_generator():
    with pytest.raises(PageError) as err:
        expand_page(mu_hkr(3, r=2, differentials={"d": ("c^3", 1)}))
    assert err.value.generator == "d"


def test_weight_mismatch_rejected():
    gens = (Generator("x", 0, 1, 1, "exterior"), Generator("y", 2, 0, 2, "polynomial"))
    with pytest.raises(PageError) as err:
        expand_page(PagePresentation(3, gens, 2, 6, differentials={"x": ("y", 1)}))
    assert err.value.generator == "x"


def test_target_outside_window_rejected():
    with pytest.raises(PageError):
        expand_page(mu_hkr(3, bound=2, r=3, differentials={"d": ("c^3", 1)}))


def test_square_nonzero_has_witness():
    gens = (Generator("x", 0, 1, 0, "exterior"), Generator("y", 1, 1, 0, "polynomial"),
            Generator("z", 2, 1, 0, "exterior"))
    pres = PagePresentation(3, gens, 1, 6, differentials={"x": ("y", 1), "y": ("z", 1)})
    with pytest.raises(DifferentialSquareError) as err:
        turn_page(pres)
    assert err.value.witness == "x"


def test_parity_rules():
    with pytest.raises(PageError):
        PagePresentation(3, (Generator("x", 1, 0, 0, "polynomial"),), 2, 4)
    with pytest.raises(PageError):
        PagePresentation(3, (Generator("x", 2, 0, 0, "exterior"),), 2, 4)
    PagePresentation(2, (Generator("x", 1, 0, 0, "polynomial"),), 2, 4)


def _pages():
    yield alpha_hkr_page(3)
    yield hkr_page(mu(3))[0]
    yield conjugate_page(alpha(3), 4)
    yield alpha_hkr_page(2)


def alpha_hkr_page(p, bound=7):
    pres, _ = hkr_page(alpha(p))
    return PagePresentation(p, pres.generators, 2, bound)


def _assignments(pres, r):
    page = ExpandedPage(pres)
    cands = admissible_differentials(pres, r)
    by_gen = {}
    for name, tgt in cands:
        by_gen.setdefault(name, []).append(tgt)
    names = sorted(by_gen)
    for combo in itertools.product(*[[None] + by_gen[n] for n in names]):
        yield {n: (t, 1) for n, t in zip(names, combo) if t is not None}


@pytest.mark.parametrize("p", [2, 3, 5])
def test_leibniz_on_all_monomial_pairs(p):
    gens = (Generator("a", 0, 1, 1, "exterior" if p > 2 else "polynomial"),
            Generator("s", 1, 0, p, "exterior"), Generator("u", 1, 1, 1, "polynomial"),
            Generator("b", 0, 2, p, "polynomial"))
    pres = PagePresentation(p, gens, 1, 6, functional=(1, 1))
    assert ExpandedPage(pres).leibniz_defect(1, {"a": ("u", 1)}) == []


@pytest.mark.parametrize("p", [2, 3, 5])
def test_leibniz_with_odd_products(p):
    # values that are products of odd classes exercise the Koszul signs
    gens = (Generator("x", 0, 1, 0, "exterior"), Generator("y", 1, 0, 0, "exterior"),
            Generator("z", 1, 1, 0, "polynomial"))
    pres = PagePresentation(p, gens, 1, 6, functional=(1, 1))
    page = ExpandedPage(pres)
    assert page.leibniz_defect(1, {"x": ("x*y", 1), "z": ("y*z", 2 % p or 1)}) == []
    assert page.leibniz_defect(1, {"x": ("z", 1)}) == []


def test_leibniz_on_scenario_pages():
    for pres in _pages():
        page = ExpandedPage(PagePresentation(pres.p, pres.generators, pres.r, min(pres.bound, 6),
                                             pres.functional))
        for r in (pres.r, pres.r + 1):
            small = PagePresentation(pres.p, pres.generators, r, min(pres.bound, 6), pres.functional)
            for diffs in _assignments(small, r):
                assert page.leibniz_defect(r, diffs) == []


def test_differentials_have_weight_zero():
    for pres in _pages():
        for diffs in _assignments(pres, pres.r + 1):
            p2 = pres.with_differentials(pres.r + 1, diffs)
            page = ExpandedPage(p2)
            _, mats = expand_page(p2)
            for key, m in mats.items():
                tgt = page.shift(key, p2.r)
                assert key[2] == tgt[2]
                assert m.rows == len(page.cells[tgt])


def test_turning_never_increases_dims():
    for pres in _pages():
        page = ExpandedPage(pres)
        state = PageState.initial(page)
        for r in range(pres.r, pres.r + 3):
            for diffs in _assignments(PagePresentation(pres.p, pres.generators, r, pres.bound,
                                                       pres.functional), r):
                new, err = turn(page, state, page.resolve(r, diffs), r)
                if err:
                    continue
                assert all(new.dim(k) <= state.dim(k) for k in page.cells)


def test_admissible_monotone_in_window():
    for p in (2, 3):
        for bound in (4, 6, 8):
            small = alpha_hkr_page(p, bound)
            big = alpha_hkr_page(p, bound + 3)
            for r in range(2, 5):
                assert set(admissible_differentials(small, r)) <= set(admissible_differentials(big, r))


def test_single_generator_has_no_candidates():
    pres = PagePresentation(3, (Generator("c", 1, -1, 1, "polynomial"),), 2, 10)
    assert all(admissible_differentials(pres, r) == [] for r in range(2, 8))


def test_permanent_sources_and_unhittable_targets_excluded():
    pres = mu_hkr(3, bound=10, r=3)
    assert admissible_differentials(pres) == [("d", "c^3")]
    marked = mu_hkr(3, bound=10, r=3, permanent={"d"})
    assert admissible_differentials(marked) == []
    blocked = mu_hkr(3, bound=10, r=3, unhittable={"c^3"})
    assert admissible_differentials(blocked) == []


@pytest.mark.parametrize("p", [2, 3, pytest.param(5, marks=pytest.mark.slow)])
def test_hkr_mu_unique(p):
    pres, r_max = hkr_page(mu(p))
    rep = forced_search(pres, hkr_abutment(mu(p)), r_max)
    assert rep.unique
    (d,) = rep.patterns[0].differentials
    assert (d.r, d.source, d.target) == (p, "d", f"c^{p}")
    dims = rep.patterns[0].e_infinity.degree_dims()
    assert dims[0] == p and all(v == 0 for n, v in dims.items() if n != 0)
    assert rep.patterns[0].e_infinity.labels((0, 0, 0)) == ("1",)


def test_every_pattern_replays_to_abutment():
    for G in (mu(2), mu(3)):
        pres, r_max = hkr_page(G)
        ab = hkr_abutment(G)
        rep = forced_search(pres, ab, r_max)
        for pat in rep.patterns:
            state = replay(pres, pat.differentials, r_max)
            page = ExpandedPage(pres)
            for n, want in ab.expected().items():
                got = sum(state.dim(k) for k in page.cells
                          if page.degree_of_key(k) == n and page.g_of_key(k) <= rep.verify_bound)
                assert got == want


def test_hkr_alpha_u_has_no_candidates():
    for p in (2, 3):
        pres, r_max = hkr_page(alpha(p))
        for r in range(2, r_max + 3):
            assert all(src != "u" for src, _ in admissible_differentials(pres, r))


@pytest.mark.parametrize("p", [2, 3])
def test_hkr_alpha_forced(p):
    pres, r_max = hkr_page(alpha(p))
    rep = forced_search(pres, hkr_abutment(alpha(p)), r_max)
    assert [d.label() for d in rep.patterns[0].differentials] == [f"d{p}(s) = u^{p}"]
    assert rep.unique
    dims = rep.patterns[0].e_infinity.degree_dims()
    assert all(dims[n] == p for n in range(0, 7))


def test_unreachable_abutment_reports_misses():
    pres, r_max = hkr_page(mu(3))
    bad = AbutmentSpec(degrees=tuple(range(-3, 4)), dims={0: 4})
    with pytest.raises(AbutmentUnreachable) as err:
        forced_search(pres, bad, r_max)
    assert err.value.report.closest_misses
    assert "d3(d) = c^3" in str(err.value)


def test_candidate_budget():
    gens = (Generator("x", 0, 1, 0, "exterior"),) + tuple(
        Generator(f"y{i}", 2, 0, 0, "polynomial") for i in range(21))
    pres = PagePresentation(3, gens, 2, 2)
    with pytest.raises(ResourceError):
        forced_search(pres, AbutmentSpec(), 2)


def test_window_without_verification_region():
    pres, r_max = hkr_page(mu(3))
    with pytest.raises(PageError):
        forced_search(PagePresentation(3, pres.generators, 2, 3), hkr_abutment(mu(3)), r_max)


@pytest.mark.parametrize("p", [2, 3])
def test_conjugate_route_forces_d2(p):
    pres = conjugate_page(alpha(p), 8)
    dims = {n: 1 for n in range(9)}
    rep = forced_search(pres, AbutmentSpec(degrees=tuple(dims), dims=dims), 3)
    assert rep.unique
    target = "beta" if p > 2 else "alpha^2"
    assert [d.label() for d in rep.patterns[0].differentials] == [f"d2(s) = {target}"]


@pytest.mark.parametrize("p", [2, 3, pytest.param(5, marks=pytest.mark.slow)])
def test_dr_hp_mu_unique(p):
    rep = forced_search(dr_hp_page(mu(p)), dr_hp_abutment(mu(p)), p)
    assert rep.unique
    (d,) = rep.patterns[0].differentials
    assert (d.r, d.source, d.target, d.laurent_exponent) == (p, "d", f"c^{p}", 1 - p)
    assert rep.patterns[0].degree_dims == {0: p, 1: 0}


@pytest.mark.parametrize("p", [2, 3, 5])
def test_dr_hp_alpha_no_candidates(p):
    pres = dr_hp_page(alpha(p))
    assert all(admissible_differentials(pres, r) == [] for r in range(2, 12))


def test_laurent_generator_must_have_weight_zero():
    with pytest.raises(PageError):
        PagePresentation(3, (Generator("T", 1, 1, 2, "laurent"),), 2, 4)


def test_tate_d2_on_truncated_p():
    hh = hochschild_bar(truncated_poly(3, 3, 1), 3, representatives=True)
    tp = tate_page(hh)
    m = tp.d2[(0, 1)]
    assert m.shape == (1, 1) and not m.is_zero()
    assert not tp.is_degenerate()


def test_tate_ground_field_degenerate():
    hh = hochschild_bar(truncated_poly(3, 1), 3, representatives=True)
    assert tate_page(hh).is_degenerate()


@pytest.mark.parametrize("p", [2, 3])
def test_tate_concentrated_in_degree_zero(p):
    hh = hochschild_bar(cartier_dual(mu_p_functions(p)), 3, representatives=True)
    assert {n for (n, w), d in hh.dims.items() if d} == {0}
    tp = tate_page(hh)
    assert tp.is_degenerate()
    assert sum(tp.e3_dims().values()) == p


def test_attainable_degrees():
    pres, _ = hkr_page(mu(3))
    assert attainable_degrees(pres, -6, 6) == {-1, 0}
    mixed = PagePresentation(3, (Generator("x", 1, 1, 0, "polynomial"), Generator("y", 1, -3, 0, "polynomial")), 2, 6)
    assert attainable_degrees(mixed, -4, 4) is None
    assert attainable_degrees(dr_hp_page(mu(3)), 0, 1) is None

"""Cohomology of classifying stacks BG for G built from mu_p and alpha_p."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from .algebra import (
    Hypersurface,
    PresentedAlgebra,
    adjoint_coaction_trivial,
    alpha_p_functions,
    cartier_dual,
    lci_cotangent,
    mu_p_functions,
)
from .ext import ext_ring
from .fp import FpMatrix, check_prime
from .graded import (
    ChainMap,
    CochainComplex,
    GradedSpace,
    GradeIndex,
    Window,
    cohomology,
    kunneth,
    mapping_fiber,
)
from .spectral import AbutmentSpec, Generator, PagePresentation, SearchReport, forced_search


class UnsupportedInput(ValueError):
    pass


class NonUniquePattern(RuntimeError):
    def __init__(self, report: SearchReport):
        pats = "; ".join(", ".join(d.label() for d in p.differentials) or "all zero" for p in report.patterns)
        super().__init__(f"{len(report.patterns)} consistent differential patterns: {pats}")
        self.report = report


class InconsistentAbutment(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GroupFactor:
    name: str
    kind: str  # "mu" or "alpha"
    functions: PresentedAlgebra
    relation: Hypersurface


@dataclass(frozen=True, eq=False)
class GroupScheme:
    p: int
    factors: tuple[GroupFactor, ...]

    @property
    def name(self) -> str:
        return " x ".join(f.name for f in self.factors)

    @property
    def lifts_with_frobenius(self) -> bool:
        return all(f.kind == "mu" for f in self.factors)


def mu(p: int) -> GroupScheme:
    check_prime(p)
    rel = Hypersurface(p, (-1,) + (0,) * (p - 1) + (1,), 0, point=1, var="x")
    return GroupScheme(p, (GroupFactor(f"mu_{p}", "mu", mu_p_functions(p), rel),))


def alpha(p: int) -> GroupScheme:
    check_prime(p)
    rel = Hypersurface(p, (0,) * p + (1,), 1, point=0)
    return GroupScheme(p, (GroupFactor(f"alpha_{p}", "alpha", alpha_p_functions(p), rel),))


def product(*groups: GroupScheme) -> GroupScheme:
    ps = {g.p for g in groups}
    if len(ps) != 1:
        raise UnsupportedInput("factors over different primes")
    return GroupScheme(ps.pop(), tuple(f for g in groups for f in g.factors))


def parse_group(text: str, p: int) -> GroupScheme:
    """'mu', 'alpha', 'mu x mu', 'mu_3 x alpha_3' (a subscript must equal p)."""
    out = []
    text = text.strip().lower().replace("μ", "mu").replace("α", "alpha")
    for part in re.split(r"\s*(?:\bx\b|×|\*)\s*", text):
        base, _, sub = part.partition("_")
        if sub and int(sub) != p:
            raise UnsupportedInput(f"{part} does not match p = {p}")
        if base == "mu":
            out.append(mu(p))
        elif base == "alpha":
            out.append(alpha(p))
        else:
            raise UnsupportedInput(f"unknown group {part!r}")
    return product(*out)


# -- Hodge cohomology ------------------------------------------------------------

_NAMES = {"mu": ({}, "d", "c"), "alpha": ({1: "alpha", 2: "beta"}, "s", "u")}


@dataclass(frozen=True)
class HodgeRing:
    """Generators with (s, t) = (cohomological degree, wedge degree)."""

    p: int
    generators: tuple[Generator, ...]
    s_max: int
    t_max: int

    def __post_init__(self):
        for g in self.generators:
            if g.kind not in ("exterior", "polynomial"):
                raise UnsupportedInput(f"{g.name}: kind {g.kind}")
            if self.p != 2 and (g.parity == 1) != (g.kind == "exterior"):
                raise UnsupportedInput(f"{g.name}: parity does not match kind")

    def monomials(self) -> list[tuple[int, ...]]:
        out = []

        def rec(i, exps, s, t):
            if i == len(self.generators):
                out.append(tuple(exps))
                return
            g = self.generators[i]
            e = 0
            if g.s <= 0 and g.t <= 0 and g.kind == "polynomial" and g.truncation is None:
                raise UnsupportedInput(f"{g.name} has no positive degree")
            while s + e * g.s <= self.s_max and t + e * g.t <= self.t_max:
                if (g.kind == "exterior" and e > 1) or (g.truncation is not None and e >= g.truncation):
                    break
                rec(i + 1, exps + [e], s + e * g.s, t + e * g.t)
                e += 1

        rec(0, [], 0, 0)
        return out

    def label(self, e: Sequence[int]) -> str:
        parts = [g.name if x == 1 else f"{g.name}^{x}" for x, g in zip(e, self.generators) if x]
        return "*".join(parts) or "1"

    def table(self) -> GradedSpace:
        cells: dict[GradeIndex, list[str]] = {}
        for e in self.monomials():
            s = sum(x * g.s for x, g in zip(e, self.generators))
            t = sum(x * g.t for x, g in zip(e, self.generators))
            w = sum(x * g.weight for x, g in zip(e, self.generators))
            cells.setdefault(GradeIndex(s, t, w), []).append(self.label(e))
        return GradedSpace({g: (len(v), tuple(sorted(v))) for g, v in cells.items()}, Window(0, self.s_max))

    def dim(self, s: int, t: int) -> int:
        return sum(d for g, d in self.table().dims_table().items() if g.deg == s and g.wedge == t)

    def presentation(self) -> list[dict]:
        return [{"name": g.name, "s": g.s, "t": g.t, "weight": g.weight, "kind": g.kind,
                 **({"truncation": g.truncation} if g.truncation else {})} for g in self.generators]

    def divided_power_flags(self) -> list[tuple[int, int]]:
        """Bidegrees where replacing each polynomial wedge-1 generator u by a
        divided-power algebra would change the dimension.  In characteristic p,
        Gamma(u) is the tensor product of k[u_[p^i]]/(u_[p^i]^p); the count
        is compared against P(u) directly."""
        alt = []
        for g in self.generators:
            if g.kind == "polynomial" and g.t == 1:
                k = 1
                while k * g.s <= self.s_max and k * g.t <= self.t_max:
                    alt.append(Generator(f"{g.name}_[{k}]", k * g.s, k * g.t, k * g.weight, "polynomial", self.p))
                    k *= self.p
            else:
                alt.append(g)
        other = HodgeRing(self.p, tuple(alt), self.s_max, self.t_max).table().dims_table()
        mine = self.table().dims_table()
        return sorted({(g.deg, g.wedge) for g in set(other) | set(mine) if other.get(g, 0) != mine.get(g, 0)})


def _factor_generators(f: GroupFactor, p: int, s_max: int, suffix: str) -> list[Generator]:
    if f.functions.hopf is None or not adjoint_coaction_trivial(f.functions):
        raise UnsupportedInput(f"{f.name}: coefficient representation is not trivial")
    ext_names, h1_name, h0_name = _NAMES[f.kind]
    gens = []
    ring = ext_ring(cartier_dual(f.functions), max(s_max, 2))
    for eg in ring.generators:
        if eg.kind == "truncated":
            kind, trunc = "polynomial", eg.height
        else:
            kind, trunc = eg.kind, None
        name = ext_names.get(eg.degree, eg.name)
        gens.append(Generator(name + suffix, eg.degree, 0, eg.weight, kind, trunc))
    colie = lci_cotangent(f.relation).colie_cohomology()
    dim_m1, w_m1 = colie[-1]
    dim_0, w_0 = colie[0]
    for i in range(dim_m1):
        gens.append(Generator(h1_name + suffix, 0, 1, w_m1, "exterior"))
    for i in range(dim_0):
        gens.append(Generator(h0_name + suffix, 1, 1, w_0, "polynomial"))
    return gens


def hodge_BG(G: GroupScheme, s_max: int = 8, t_max: int | None = None) -> HodgeRing:
    """Hodge cohomology H^s(BG, wedge^t L) in the box s <= s_max, t <= t_max."""
    t_max = s_max if t_max is None else t_max
    many = len(G.factors) > 1
    gens = []
    for i, f in enumerate(G.factors):
        gens += _factor_generators(f, G.p, s_max, str(i + 1) if many else "")
    return HodgeRing(G.p, tuple(gens), s_max, t_max)


# -- de Rham cohomology -----------------------------------------------------------

@dataclass
class DeRhamResult:
    space: GradedSpace  # grades (degree, 0, weight)
    route: str
    ring: list[dict] = field(default_factory=list)
    search: SearchReport | None = None

    def degree_dims(self) -> dict:
        return self.space.degree_dims()


def _regrade(table: GradedSpace, n_max: int) -> GradedSpace:
    cells: dict[GradeIndex, list] = {}
    for g, (d, labels) in table.cells.items():
        n = g.deg + g.wedge
        if n <= n_max:
            dim, labs = cells.get(GradeIndex(n, 0, g.weight), (0, ()))
            cells[GradeIndex(n, 0, g.weight)] = (dim + d, labs + labels)
    return GradedSpace(cells, Window(0, n_max))


def hdr_page(G: GroupScheme, n_max: int, r_max: int = 3) -> PagePresentation:
    """Hodge-de Rham page, coordinates (wedge, cohomological degree)."""
    h = hodge_BG(G, n_max + r_max + 2)
    gens = tuple(Generator(g.name, g.t, g.s, g.weight, g.kind, g.truncation) for g in h.generators)
    return PagePresentation(G.p, gens, 1, n_max + r_max + 1, functional=(1, 1), name=f"HdR B{G.name}")


def conjugate_page(G: GroupScheme, n_max: int, r_max: int = 3) -> PagePresentation:
    """Conjugate page: Frobenius-twisted Hodge classes, coordinates (degree, wedge)."""
    h = hodge_BG(G, n_max + r_max + 2)
    gens = tuple(Generator(g.name, g.s, g.t, G.p * g.weight, g.kind, g.truncation) for g in h.generators)
    return PagePresentation(G.p, gens, 2, n_max + r_max + 1, functional=(1, 1), name=f"conjugate B{G.name}")


def _space_from_pattern(report: SearchReport, n_max: int) -> GradedSpace:
    pat = report.patterns[0]
    cells: dict[GradeIndex, tuple] = {}
    for g, (d, labels) in pat.e_infinity.cells.items():
        if 0 <= g.deg <= n_max:
            dim, labs = cells.get(GradeIndex(g.deg, 0, g.weight), (0, ()))
            cells[GradeIndex(g.deg, 0, g.weight)] = (dim + d, labs + labels)
    top = min(n_max, pat.e_infinity.window.deg_max)
    return GradedSpace(cells, Window(0, top))


def derham_BG(G: GroupScheme, n_max: int = 8, r_max: int = 3) -> DeRhamResult:
    if G.lifts_with_frobenius:
        # the conjugate filtration splits, so H_dR is the Hodge table regraded
        h = hodge_BG(G, n_max)
        ring = [{"name": g.name, "degree": g.s + g.t, "weight": g.weight, "kind": g.kind} for g in h.generators]
        return DeRhamResult(_regrade(h.table(), n_max), "splitting", ring)
    if len(G.factors) > 1:
        parts = [derham_BG(GroupScheme(G.p, (f,)), n_max, r_max) for f in G.factors]
        space = parts[0].space
        for part in parts[1:]:
            space = kunneth(space, part.space)
        return DeRhamResult(space.restrict(Window(0, n_max)), "kunneth")
    report = forced_search(hdr_page(G, n_max, r_max), AbutmentSpec(weight_divisible_by=G.p), r_max)
    if not report.unique:
        raise NonUniquePattern(report)
    space = _space_from_pattern(report, n_max)
    ring = []
    for n in (1, 2):
        for g, (d, labels) in space.cells.items():
            if g.deg == n:
                ring += [{"name": lab, "degree": n, "weight": g.weight} for lab in labels]
    return DeRhamResult(space, "search", ring, report)


def conjugate_route(G: GroupScheme, n_max: int = 8, r_max: int = 3) -> tuple[SearchReport, GradedSpace]:
    """Forced search on the conjugate page against the de Rham degree dims."""
    dr = derham_BG(G, n_max, r_max)
    dims = {n: d for n, d in dr.degree_dims().items()}
    report = forced_search(conjugate_page(G, n_max, r_max), AbutmentSpec(degrees=tuple(dims), dims=dims), r_max)
    if not report.unique:
        raise NonUniquePattern(report)
    return report, _space_from_pattern(report, n_max)


def hkr_page(G: GroupScheme, n_max: int = 6, r_max: int | None = None) -> tuple[PagePresentation, int]:
    """HKR page E_2^{s,t} = H^s(wedge^{-t} L) with the window g = s."""
    r_max = G.p if r_max is None else r_max
    guard = sum(range(2, r_max + 1))
    bound = n_max + G.p + guard + 2
    h = hodge_BG(G, bound + 1, bound + 1)
    gens = tuple(Generator(g.name, g.s, -g.t, g.weight, g.kind, g.truncation) for g in h.generators)
    return PagePresentation(G.p, gens, 2, bound, functional=(1, 0), name=f"HKR B{G.name}"), r_max


def hkr_abutment(G: GroupScheme, n_max: int = 6) -> AbutmentSpec:
    """mu_p-type groups: HH concentrated in degree 0 of dimension |G|;
    alpha_p: the p-th power of the weight-1 class u vanishes."""
    if G.lifts_with_frobenius:
        order = G.p ** len(G.factors)
        return AbutmentSpec(degrees=tuple(range(-n_max, n_max + 1)), dims={0: order})
    if len(G.factors) == 1:
        return AbutmentSpec(must_vanish=(f"u^{G.p}",))
    raise UnsupportedInput("HKR abutment is only declared for mu-type groups and alpha_p")


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_']", "", name)


def dr_hp_page(G: GroupScheme, r_max: int | None = None, bound: int | None = None) -> PagePresentation:
    """de Rham-HP page: H_dR (x) P(T^{+-1}) with T in bidegree (1, 1)."""
    dr = derham_BG(G, 4)
    r_max = G.p if r_max is None else r_max
    gens = []
    for g in dr.ring:
        if g.get("kind") is None:
            kind = "exterior" if g["degree"] % 2 else "polynomial"
        else:
            kind = g["kind"]
        gens.append(Generator(_safe(g["name"]), g["degree"], 0, g["weight"], kind))
    gens.append(Generator("T", 1, 1, 0, "laurent"))
    guard = sum(2 * r - 1 for r in range(2, r_max + 1))
    bound = guard + 2 * G.p + 4 if bound is None else bound
    permanent = {g.name for g in gens if g.degree % 2 == 0 and g.kind != "laurent"}
    return PagePresentation(G.p, tuple(gens), 2, bound, permanent=permanent, name=f"dR-HP B{G.name}")


def dr_hp_abutment(G: GroupScheme) -> AbutmentSpec:
    """Two-periodic abutment: |G| classes in even degrees, none in odd."""
    return AbutmentSpec(degrees=(0, 1), dims={0: G.p ** len(G.factors)}, periodic=True)


# -- crystalline cohomology --------------------------------------------------------

@dataclass(frozen=True)
class TorsionModule:
    """free_rank copies of W (shown as Z/p^m) plus Z/p^e for e in torsion."""

    m: int
    free_rank: int = 0
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "torsion", tuple(sorted(self.torsion)))
        for e in self.torsion:
            if not 1 <= e < self.m:
                raise ValueError(f"torsion exponent {e} outside 1..{self.m - 1}")

    def invariant_factors(self) -> tuple[int, ...]:
        return self.torsion + (self.m,) * self.free_rank

    def mod_p_dim(self) -> int:
        return self.free_rank + len(self.torsion)

    def p_torsion_dim(self) -> int:
        # W has no p-torsion; each Z/p^e contributes one line
        return len(self.torsion)

    def is_zero(self) -> bool:
        return not self.free_rank and not self.torsion

    def describe(self, p: int) -> str:
        parts = [f"Z/{p}^{e}" if e > 1 else f"Z/{p}" for e in self.invariant_factors()]
        return " + ".join(parts) or "0"


def _tensor(a: TorsionModule, b: TorsionModule) -> TorsionModule:
    free = a.free_rank * b.free_rank
    tors = [e for e in a.torsion for _ in range(b.free_rank)] + [e for e in b.torsion for _ in range(a.free_rank)]
    tors += [min(x, y) for x in a.torsion for y in b.torsion]
    return TorsionModule(a.m, free, tuple(tors))


def _tor1(a: TorsionModule, b: TorsionModule) -> TorsionModule:
    return TorsionModule(a.m, 0, tuple(min(x, y) for x in a.torsion for y in b.torsion))


def _sum(mods: Sequence[TorsionModule], m: int) -> TorsionModule:
    return TorsionModule(m, sum(x.free_rank for x in mods), tuple(e for x in mods for e in x.torsion))


def crys_BG(G: GroupScheme, m: int = 3, n_max: int = 8) -> dict[int, TorsionModule]:
    """H^n_crys(BG/W) for n <= n_max; W is shown through Z/p^m."""
    if m < 2:
        raise ValueError("Witt truncation m must be at least 2")
    factor = {0: TorsionModule(m, 1)}
    for n in range(1, n_max + 2):
        # W[c]/(pc) with |c| = 2, for both mu_p and alpha_p
        factor[n] = TorsionModule(m, 0, (1,)) if n % 2 == 0 else TorsionModule(m)
    result = factor
    for _ in G.factors[1:]:
        nxt = {}
        for n in range(n_max + 1):
            terms = [_tensor(result[i], factor[n - i]) for i in range(n + 1)]
            terms += [_tor1(result[i], factor[n + 1 - i]) for i in range(n + 2)]
            nxt[n] = _sum(terms, m)
        nxt[n_max + 1] = TorsionModule(m)  # not needed beyond the window
        result = nxt
    return {n: result[n] for n in range(n_max + 1)}


def crys_m_stable(G: GroupScheme, m: int = 3, n_max: int = 8) -> bool:
    a, b = crys_BG(G, m, n_max), crys_BG(G, m + 1, n_max)
    return all((a[n].free_rank, a[n].torsion) == (b[n].free_rank, b[n].torsion) for n in a)


def mod_p_defect(G: GroupScheme, m: int = 3, n_max: int = 8) -> dict[int, tuple[int, int]]:
    """Degrees where dim(H^n/p) + dim(H^(n+1)[p]) differs from dim H^n_dR."""
    crys = crys_BG(G, m, n_max + 1)
    dr = derham_BG(G, n_max).degree_dims()
    bad = {}
    for n in range(n_max + 1):
        lhs = crys[n].mod_p_dim() + crys[n + 1].p_torsion_dim()
        if lhs != dr[n]:
            bad[n] = (lhs, dr[n])
    return bad


@dataclass(frozen=True)
class TPAbutment:
    even_only: bool = True
    torsion_free: bool = True
    odd_nonzero: bool = False


@dataclass
class TPReport:
    degenerate: bool
    split: bool | None
    odd_degrees: list[int]
    torsion_degrees: list[int]
    reason: str

    def as_dict(self) -> dict:
        return {"degenerate": self.degenerate, "split": self.split, "odd_degrees": self.odd_degrees,
                "torsion_degrees": self.torsion_degrees, "reason": self.reason}


def tp_accounting(G: GroupScheme, n_max: int = 8, m: int = 3, abutment: TPAbutment = TPAbutment()) -> TPReport:
    """Degeneration and splitting of the crystalline-TP page E_2 = H^(s-t)_crys.

    Every d_r changes total degree by one, so a page concentrated in even
    degrees degenerates; odd classes facing an even abutment must die."""
    if abutment.even_only and abutment.odd_nonzero:
        raise InconsistentAbutment("abutment declared both even-only and with odd classes")
    crys = crys_BG(G, m, n_max)
    odd = [n for n, mod in crys.items() if n % 2 and not mod.is_zero()]
    tors = [n for n, mod in crys.items() if mod.torsion]
    if not odd:
        if abutment.odd_nonzero:
            raise InconsistentAbutment("page is concentrated in even degrees, abutment has odd classes")
        if tors and abutment.torsion_free:
            return TPReport(True, False, odd, tors,
                            "no differentials by parity; torsion in the graded pieces of a torsion-free abutment")
        return TPReport(True, True, odd, tors, "no differentials by parity; graded pieces free")
    if abutment.even_only:
        return TPReport(False, None, odd, tors,
                        f"H^{odd[0]}_crys = {crys[odd[0]].describe(G.p)} cannot survive to an even abutment")
    return TPReport(False, None, odd, tors, "odd classes present; verdict needs more input")


# -- BPGL_n ------------------------------------------------------------------------

def pgl_omega1(n: int, p: int) -> GradedSpace:
    """H^*(BPGL_n, Omega^1): the fiber of multiplication by n on k[-1]."""
    check_prime(p)
    if n < 2:
        raise ValueError("n must be at least 2")
    line = CochainComplex(p, {1: 1}, {})
    f = ChainMap(line, line, {1: FpMatrix([[n % p]], p)})
    fib = mapping_fiber(f)
    return cohomology(fib, Window(0, 3), representatives=False)

"""Multiplicative, weight-graded spectral sequences and forced-differential search.

A page is the free graded-commutative algebra on a list of generators,
cut off by a linear window g = a*s + b*t <= bound.  Each cell (s, t, weight)
carries subspaces B <= Z of its monomial span; E_r of the cell is Z/B.
Differentials are given on generators and extended by the Leibniz rule.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .ext import ResourceError
from .fp import FpMatrix, hstack, kernel_basis, rank, rref
from .graded import GradedSpace, GradeIndex, Window

KINDS = ("exterior", "polynomial", "laurent")


class PageError(ValueError):
    def __init__(self, message: str, generator: str | None = None):
        super().__init__(message)
        self.generator = generator


class DifferentialSquareError(PageError):
    def __init__(self, message: str, witness: str):
        super().__init__(message)
        self.witness = witness


class AbutmentUnreachable(RuntimeError):
    def __init__(self, report: "SearchReport"):
        misses = "; ".join(m.describe() for m in report.closest_misses) or "no branch survived"
        super().__init__(f"abutment unreachable: closest misses: {misses}")
        self.report = report


@dataclass(frozen=True)
class Generator:
    name: str
    s: int
    t: int
    weight: int = 0
    kind: str = "polynomial"
    truncation: int | None = None  # x^truncation = 0

    @property
    def degree(self) -> int:
        return self.s + self.t

    @property
    def parity(self) -> int:
        return (self.s + self.t) % 2


@dataclass(frozen=True)
class PagePresentation:
    p: int
    generators: tuple[Generator, ...]
    r: int
    bound: int
    functional: tuple[int, int] = (1, 0)
    differentials: Mapping[str, tuple[str, int]] = field(default_factory=dict)
    permanent: frozenset = frozenset()
    unhittable: frozenset = frozenset()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "permanent", frozenset(self.permanent))
        object.__setattr__(self, "unhittable", frozenset(self.unhittable))
        object.__setattr__(self, "differentials", dict(self.differentials))
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise PageError("generator names must be unique")
        laurent = [g for g in self.generators if g.kind == "laurent"]
        if len(laurent) > 1:
            raise PageError("at most one Laurent generator is supported")
        for g in self.generators:
            if g.kind not in KINDS:
                raise PageError(f"unknown kind {g.kind!r}", g.name)
            if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_']*", g.name):
                raise PageError(f"bad generator name {g.name!r}", g.name)
            if g.kind == "exterior" and g.parity == 0 and self.p != 2:
                raise PageError(f"exterior generator {g.name} has even total degree", g.name)
            if g.kind == "polynomial" and g.parity == 1 and self.p != 2:
                raise PageError(f"polynomial generator {g.name} has odd total degree", g.name)
            if g.kind == "laurent":
                if g.weight != 0 or g.parity != 0 or g.s + g.t <= 0:
                    raise PageError(f"Laurent generator {g.name} needs weight 0 and positive even degree", g.name)
        act = [g for g in self.generators if g.kind != "laurent"]
        for g in act:
            if g.kind == "polynomial" and g.truncation is None and self.g_of(g.s, g.t) <= 0:
                raise PageError(f"polynomial generator {g.name} has g <= 0, window would be infinite", g.name)

    @property
    def laurent(self) -> Generator | None:
        for g in self.generators:
            if g.kind == "laurent":
                return g
        return None

    def g_of(self, s: int, t: int) -> int:
        L = self.laurent
        if L is not None:
            return L.t * s - L.s * t
        a, b = self.functional
        return a * s + b * t

    def delta_g(self, r: int) -> int:
        return self.g_of(r, 1 - r)

    def with_differentials(self, r: int, diffs: Mapping[str, tuple[str, int]]) -> "PagePresentation":
        return PagePresentation(self.p, self.generators, r, self.bound, self.functional, diffs,
                                self.permanent, self.unhittable, self.name)


@dataclass(frozen=True)
class AbutmentSpec:
    """Expected E_infinity.

    `dims` maps a total degree (or a (degree, weight) pair) to a dimension;
    degrees listed in `degrees` but absent from `dims` must be 0.  With
    `periodic`, degrees are residues modulo the Laurent period.
    """

    degrees: tuple = ()
    dims: Mapping = field(default_factory=dict)
    weight_divisible_by: int | None = None
    must_vanish: tuple[str, ...] = ()
    periodic: bool = False

    def expected(self) -> dict:
        out = {}
        for n in self.degrees:
            out[n] = 0
        out.update(self.dims)
        return out

    @property
    def by_weight(self) -> bool:
        return any(isinstance(k, tuple) for k in self.dims)


@dataclass(frozen=True)
class Differential:
    r: int
    source: str
    target: str
    scalar: int = 1
    laurent_exponent: int | None = None

    def label(self) -> str:
        tgt = self.target
        if self.laurent_exponent is not None and self.laurent_exponent != 0:
            tgt = f"{tgt}*T^({self.laurent_exponent})"
        return f"d{self.r}({self.source}) = {tgt}"


@dataclass
class Miss:
    pattern: tuple[Differential, ...]
    distance: int
    reason: str

    def describe(self) -> str:
        pat = ", ".join(d.label() for d in self.pattern) or "all zero"
        return f"[{pat}] off by {self.distance} ({self.reason})"


@dataclass
class Pattern:
    differentials: tuple[Differential, ...]
    e_infinity: GradedSpace
    degree_dims: dict

    def key(self):
        return tuple((d.r, d.source, d.target) for d in self.differentials)


@dataclass
class SearchReport:
    patterns: list[Pattern]
    stats: dict
    closest_misses: list[Miss]
    bound: int
    guard: int
    verify_bound: int

    @property
    def unique(self) -> bool:
        return len(self.patterns) == 1

    def as_dict(self) -> dict:
        return {
            "unique": self.unique,
            "patterns": [
                {"differentials": [d.label() for d in pat.differentials],
                 "degree_dims": {str(k): v for k, v in sorted(pat.degree_dims.items())}}
                for pat in self.patterns
            ],
            "closest_misses": [m.describe() for m in self.closest_misses],
            "window": {"bound": self.bound, "guard": self.guard, "verify_bound": self.verify_bound},
            "stats": dict(sorted(self.stats.items())),
        }


class ExpandedPage:
    """Monomial basis of a page in its window, grouped into cells."""

    def __init__(self, pres: PagePresentation):
        self.pres = pres
        self.p = pres.p
        self.L = pres.laurent
        self.gens = [g for g in pres.generators if g.kind != "laurent"]
        self.names = [g.name for g in self.gens]
        self._par = np.array([g.parity for g in self.gens], dtype=np.int64)
        self.monomials: list[tuple[int, ...]] = []
        self._enumerate(0, [], 0, 0)
        self.monomials.sort(key=lambda e: (self.key_of(e), e))
        self.index = {e: i for i, e in enumerate(self.monomials)}
        self.cells: dict[tuple, list[tuple[int, ...]]] = {}
        for e in self.monomials:
            self.cells.setdefault(self.key_of(e), []).append(e)
        self.local = {k: {e: i for i, e in enumerate(v)} for k, v in self.cells.items()}

    # -- monomials ---------------------------------------------------------
    def _enumerate(self, i: int, exps: list[int], s: int, t: int):
        if i == len(self.gens):
            if self.pres.g_of(s, t) <= self.pres.bound:
                self.monomials.append(tuple(exps))
            return
        g = self.gens[i]
        rest_min = sum(min(0, self.pres.g_of(h.s, h.t)) for h in self.gens[i + 1:] if h.kind == "exterior")
        e = 0
        while True:
            if g.kind == "exterior" and e > 1:
                break
            if g.truncation is not None and e >= g.truncation:
                break
            gs, gt = s + e * g.s, t + e * g.t
            if e > 0 and self.pres.g_of(gs, gt) + rest_min > self.pres.bound and self.pres.g_of(g.s, g.t) > 0:
                break
            self._enumerate(i + 1, exps + [e], gs, gt)
            e += 1
            if e > 10_000:
                raise PageError("window is not finite", g.name)

    def bidegree(self, e: Sequence[int]) -> tuple[int, int]:
        s = sum(x * g.s for x, g in zip(e, self.gens))
        t = sum(x * g.t for x, g in zip(e, self.gens))
        return s, t

    def weight(self, e: Sequence[int]) -> int:
        return sum(x * g.weight for x, g in zip(e, self.gens))

    def degree(self, e: Sequence[int]) -> int:
        s, t = self.bidegree(e)
        return s + t

    def key_of(self, e: Sequence[int]) -> tuple:
        s, t = self.bidegree(e)
        w = self.weight(e)
        if self.L is None:
            return (s, t, w)
        P = self.L.s + self.L.t
        return (self.L.t * s - self.L.s * t, (s + t) % P, w)

    def g_of_key(self, key: tuple) -> int:
        if self.L is None:
            return self.pres.g_of(key[0], key[1])
        return key[0]

    def degree_of_key(self, key: tuple) -> int:
        return key[0] + key[1] if self.L is None else key[1]

    def filtration_of_key(self, key: tuple) -> int:
        return key[0]

    def shift(self, key: tuple, r: int) -> tuple:
        if self.L is None:
            return (key[0] + r, key[1] + 1 - r, key[2])
        P = self.L.s + self.L.t
        return (key[0] + r * P - self.L.s, (key[1] + 1) % P, key[2])

    def label(self, e: Sequence[int]) -> str:
        parts = []
        for x, g in zip(e, self.gens):
            if x == 1:
                parts.append(g.name)
            elif x:
                parts.append(f"{g.name}^{x}")
        return "*".join(parts) or "1"

    def parse(self, text: str) -> tuple[int, ...]:
        text = text.strip()
        e = [0] * len(self.gens)
        if text in ("", "1"):
            return tuple(e)
        for part in text.split("*"):
            m = re.fullmatch(r"\s*([A-Za-z][A-Za-z0-9_']*)\s*(?:\^\s*(\d+))?\s*", part)
            if not m or m.group(1) not in self.names:
                raise PageError(f"cannot parse monomial {text!r}")
            e[self.names.index(m.group(1))] += int(m.group(2) or 1)
        return tuple(e)

    def mul(self, e1: Sequence[int], e2: Sequence[int]) -> tuple[int, tuple[int, ...] | None]:
        """Product of two monomials: (sign, exponents) or (0, None)."""
        out = []
        for x, y, g in zip(e1, e2, self.gens):
            z = x + y
            if g.kind == "exterior" and z > 1:
                return 0, None
            if g.truncation is not None and z >= g.truncation:
                return 0, None
            out.append(z)
        # move each odd factor of e2 left past the odd factors of e1 with larger index
        a = np.asarray(e1, dtype=np.int64) * self._par
        b = np.asarray(e2, dtype=np.int64) * self._par
        later = np.cumsum(a[::-1])[::-1]  # sum_{j >= i} a_j
        swaps = int(np.sum(b[:-1] * later[1:])) if len(a) > 1 else 0
        return (-1) ** swaps, tuple(out)

    def in_window(self, e: Sequence[int]) -> bool:
        return tuple(e) in self.index

    # -- derivations -------------------------------------------------------
    def derivation(self, assign: Mapping[int, tuple[int, tuple[int, ...]]], e: Sequence[int]) -> dict:
        """D(monomial) from generator values, Leibniz with Koszul signs."""
        out: dict[tuple[int, ...], int] = {}
        prefix_deg = 0
        for i, x in enumerate(e):
            if x and i in assign:
                coef, target = assign[i]
                left = list(e[:i]) + [x - 1] + [0] * (len(e) - i - 1)
                right = [0] * (i + 1) + list(e[i + 1:])
                c = coef * x * (-1) ** prefix_deg
                if c % self.p:
                    s1, m1 = self.mul(left, target)
                    if s1:
                        s2, m2 = self.mul(m1, right)
                        if s2:
                            out[m2] = (out.get(m2, 0) + c * s1 * s2) % self.p
            prefix_deg += x * self.gens[i].degree
        return {k: v for k, v in out.items() if v}

    def resolve(self, r: int, diffs: Mapping[str, tuple[str, int]]) -> dict[int, tuple[int, tuple[int, ...]]]:
        """Validate generator differentials for page r; index -> (scalar, target)."""
        assign = {}
        for name, (target, scalar) in diffs.items():
            if self.L is not None and name == self.L.name:
                raise PageError(f"Laurent generator {name} is permanent", name)
            if name not in self.names:
                raise PageError(f"unknown generator {name}", name)
            i = self.names.index(name)
            src = tuple(1 if j == i else 0 for j in range(len(self.gens)))
            tgt = self.parse(target)
            if self.key_of(tgt) != self.shift(self.key_of(src), r):
                raise PageError(f"d{r}({name}) = {target} has the wrong bidegree or weight", name)
            if not self.in_window(tgt):
                raise PageError(f"target {target} of {name} lies outside the window", name)
            if scalar % self.p:
                assign[i] = (scalar % self.p, tgt)
        return assign

    def cell_matrix(self, assign, key: tuple, r: int) -> tuple[FpMatrix, FpMatrix]:
        """(in-window part, out-of-window part) of D on the cell `key`."""
        src = self.cells[key]
        tkey = self.shift(key, r)
        tgt = self.local.get(tkey, {})
        images = [self.derivation(assign, e) for e in src]
        ghosts: dict[tuple, int] = {}
        for img in images:
            for m in img:
                if m not in tgt and m not in ghosts:
                    ghosts[m] = len(ghosts)
        D = np.zeros((len(tgt), len(src)), dtype=np.int64)
        G = np.zeros((len(ghosts), len(src)), dtype=np.int64)
        for j, img in enumerate(images):
            for m, c in img.items():
                if m in tgt:
                    D[tgt[m], j] = c
                else:
                    G[ghosts[m], j] = c
        return FpMatrix(D, self.p), FpMatrix(G, self.p)

    def leibniz_defect(self, r: int, diffs: Mapping[str, tuple[str, int]]) -> list[tuple[str, str]]:
        """Monomial pairs where D(xy) != D(x) y + (-1)^|x| x D(y)."""
        assign = self.resolve(r, diffs)
        bad = []
        for x, y in itertools.product(self.monomials, repeat=2):
            sign, xy = self.mul(x, y)
            lhs: dict = {}
            if sign:
                for m, c in self.derivation(assign, xy).items():
                    lhs[m] = (lhs.get(m, 0) + sign * c) % self.p
            rhs: dict = {}
            for m, c in self.derivation(assign, x).items():
                s2, prod = self.mul(m, y)
                if s2:
                    rhs[prod] = (rhs.get(prod, 0) + c * s2) % self.p
            sx = (-1) ** (self.degree(x) % 2)
            for m, c in self.derivation(assign, y).items():
                s2, prod = self.mul(x, m)
                if s2:
                    rhs[prod] = (rhs.get(prod, 0) + sx * c * s2) % self.p
            lhs = {k: v for k, v in lhs.items() if v}
            rhs = {k: v % self.p for k, v in rhs.items() if v % self.p}
            if lhs != rhs:
                bad.append((self.label(x), self.label(y)))
        return bad


@dataclass
class PageState:
    """Z and B per cell (columns in cell-local monomial coordinates)."""

    Z: dict
    B: dict
    tainted: set

    @classmethod
    def initial(cls, page: ExpandedPage) -> "PageState":
        Z = {k: FpMatrix.identity(len(v), page.p) for k, v in page.cells.items()}
        B = {k: FpMatrix.zeros(len(v), 0, page.p) for k, v in page.cells.items()}
        return cls(Z, B, set())

    def dim(self, key) -> int:
        if key not in self.Z:
            return 0
        return self.Z[key].cols - self.B[key].cols

    def table(self) -> dict:
        return {k: self.dim(k) for k in self.Z if self.dim(k)}


def _contained(sub: FpMatrix, space: FpMatrix) -> bool:
    if sub.cols == 0:
        return True
    return rank(hstack([space, sub])) == rank(space)


def _basis(m: FpMatrix) -> FpMatrix:
    if m.cols == 0:
        return m
    red, piv = rref(m.T)
    return FpMatrix(red.data[:len(piv)].T.copy(), m.p)


def _in_span(v: np.ndarray, space: FpMatrix, p: int) -> bool:
    return _contained(FpMatrix(v.reshape(-1, 1), p), space)


def turn(page: ExpandedPage, state: PageState, assign, r: int, strict: bool = False) -> tuple[PageState | None, str | None]:
    """E_(r+1) from E_r and d_r; returns (state, None) or (None, reason)."""
    p = page.p
    mats = {k: page.cell_matrix(assign, k, r) for k in page.cells} if assign else {}
    Z = dict(state.Z)
    B = {k: v for k, v in state.B.items()}
    tainted = set(state.tainted)
    for key in page.cells:
        tkey = page.shift(key, r)
        if key not in mats:
            continue
        D, G = mats[key]
        Zc = state.Z[key]
        DZ = D @ Zc if D.rows else FpMatrix.zeros(0, Zc.cols, p)
        GZ = G @ Zc if G.rows else FpMatrix.zeros(0, Zc.cols, p)
        if not GZ.is_zero():
            tainted.add(key)
        if key in state.tainted and not D.is_zero():
            tainted.add(tkey)
        if tkey in state.tainted and not DZ.is_zero():
            tainted.add(key)
        if tkey not in page.cells or DZ.is_zero():
            continue
        clean = key not in state.tainted and tkey not in state.tainted
        if clean:
            if not _contained(DZ, state.Z[tkey]):
                msg = f"d{r} sends a cycle of {page.label(page.cells[key][0])}'s cell off the cycles"
                return _fail(msg, strict, page, key)
            if state.B[key].cols and not _contained(D @ state.B[key], state.B[tkey]):
                return _fail(f"d{r} is not defined on E_{r} at cell {key}", strict, page, key)
            t2 = page.shift(tkey, r)
            if t2 in page.cells and t2 not in state.tainted and tkey in mats:
                D2 = mats[tkey][0]
                DDZ = D2 @ DZ if D2.rows else FpMatrix.zeros(0, DZ.cols, p)
                if not _contained(DDZ, state.B[t2]):
                    witness = _witness(page, key, Zc, D2, D, state.B[t2])
                    if strict:
                        raise DifferentialSquareError(f"d{r} o d{r} != 0 at {witness}", witness)
                    return None, f"d{r} squares to nonzero at {witness}"
        # new cycles: z in Z with D z in B(target)
        Bt = state.B[tkey]
        M = hstack([DZ, Bt])
        ker = kernel_basis(M)
        coeffs = FpMatrix(ker.data[:Zc.cols], p)
        Z[key] = _basis(Zc @ coeffs)
        B[tkey] = _basis(hstack([B[tkey], DZ]))
    return PageState(Z, B, tainted), None


def _fail(msg, strict, page, key):
    if strict:
        raise PageError(msg)
    return None, msg


def _witness(page, key, Zc, D2, D, Bt) -> str:
    for j in range(Zc.cols):
        z = Zc.column(j)
        img = (D2 @ (D @ FpMatrix(z.reshape(-1, 1), page.p))).column(0)
        if not _in_span(img, Bt, page.p):
            lead = int(np.flatnonzero(z)[0])
            return page.label(page.cells[key][lead])
    return page.label(page.cells[key][0])


def _class_alive(page: ExpandedPage, state: PageState, e: tuple) -> bool:
    key = page.key_of(e)
    v = np.zeros(len(page.cells[key]), dtype=np.int64)
    v[page.local[key][e]] = 1
    return _in_span(v, state.Z[key], page.p) and not _in_span(v, state.B[key], page.p)


def _monomial_class_zero(page: ExpandedPage, state: PageState, e: tuple) -> bool:
    key = page.key_of(e)
    v = np.zeros(len(page.cells[key]), dtype=np.int64)
    v[page.local[key][e]] = 1
    return _in_span(v, state.B[key], page.p)


def candidates(page: ExpandedPage, state: PageState, r: int) -> list[tuple[str, tuple[int, ...]]]:
    """Generator/target pairs admissible on E_r."""
    out = []
    unhittable = {page.parse(m) for m in page.pres.unhittable}
    for i, g in enumerate(page.gens):
        if g.name in page.pres.permanent:
            continue
        src = tuple(1 if j == i else 0 for j in range(len(page.gens)))
        if src not in page.index or not _class_alive(page, state, src):
            continue
        skey = page.key_of(src)
        if skey in state.tainted:
            continue
        tkey = page.shift(skey, r)
        for e in page.cells.get(tkey, []):
            if e in unhittable:
                continue
            if _class_alive(page, state, e):
                out.append((g.name, e))
    return out


def admissible_differentials(pres: PagePresentation, r: int | None = None,
                             state: PageState | None = None) -> list[tuple[str, str]]:
    """(source, target monomial) pairs of bidegree (r, 1-r) and weight 0."""
    page = ExpandedPage(pres)
    r = pres.r if r is None else r
    state = state or PageState.initial(page)
    return [(name, page.label(e)) for name, e in candidates(page, state, r)]


def expand_page(pres: PagePresentation) -> tuple[GradedSpace, dict]:
    """Monomial table of the page and the cellwise matrices of d_r."""
    page = ExpandedPage(pres)
    assign = page.resolve(pres.r, pres.differentials)
    mats = {}
    for key in page.cells:
        D, _ = page.cell_matrix(assign, key, pres.r)
        if D.rows and not D.is_zero():
            mats[key] = D
    return _space(page, {k: len(v) for k, v in page.cells.items()}, pres.bound), mats


def _space(page: ExpandedPage, table: Mapping, bound: int, labels: Mapping | None = None) -> GradedSpace:
    # (s, t, w) and collapsed (l, n mod P, w) keys both map injectively here
    cells = {}
    for key, d in table.items():
        if d:
            g = GradeIndex(page.degree_of_key(key), page.filtration_of_key(key), key[2])
            cells[g] = (d, tuple(labels[key]) if labels else ())
    degs = [g.deg for g in cells] or [0]
    return GradedSpace(cells, Window(min(degs), max(degs)))


def turn_page(pres: PagePresentation, state: PageState | None = None) -> tuple[PageState, dict]:
    """Apply d_r given by `pres.differentials`; returns the new state and its
    dimension table keyed by cell."""
    page = ExpandedPage(pres)
    state = state or PageState.initial(page)
    assign = page.resolve(pres.r, pres.differentials)
    new, _ = turn(page, state, assign, pres.r, strict=True)
    return new, new.table()


def survivors(page: ExpandedPage, state: PageState, key) -> list[str]:
    """Labels of monomials whose classes span E at `key` (leading terms)."""
    Zc, Bc = state.Z[key], state.B[key]
    if Zc.cols == Bc.cols:
        return []
    aug = hstack([Bc, Zc])
    _, piv = rref(aug)
    out = []
    for j in piv:
        if j >= Bc.cols:
            z = Zc.column(j - Bc.cols)
            out.append(_vec_label(page, key, z))
    return out


def _vec_label(page, key, v) -> str:
    terms = []
    for i in np.flatnonzero(v):
        c = int(v[i])
        name = page.label(page.cells[key][i])
        terms.append(name if c == 1 else f"{c}{name}" if name == "1" else f"{c}*{name}")
    return " + ".join(terms)


def attainable_degrees(pres: PagePresentation, lo: int, hi: int) -> set[int] | None:
    """Total degrees in [lo, hi] carried by some monomial at any filtration,
    or None when that cannot be bounded (polynomial degrees of both signs,
    or a collapsed Laurent generator)."""
    if pres.laurent is not None:
        return None
    poly = {g.degree for g in pres.generators if g.kind == "polynomial" and g.degree}
    if any(d > 0 for d in poly) and any(d < 0 for d in poly):
        return None
    ext = [g.degree for g in pres.generators if g.kind == "exterior"]
    base = {0}
    for d in ext:
        base |= {b + d for b in base}
    # all polynomial degrees share a sign, so sums only move one way and the
    # search can stop once it leaves the interval on that side
    reached, todo = set(base), list(base)
    while todo:
        n = todo.pop()
        for d in poly:
            m = n + d
            if m not in reached and (m <= hi if d > 0 else m >= lo):
                reached.add(m)
                todo.append(m)
    return {n for n in reached if lo <= n <= hi}


class _Search:
    def __init__(self, pres: PagePresentation, abutment: AbutmentSpec, r_max: int,
                 max_candidates: int, max_branches: int):
        self.pres = pres
        self.page = ExpandedPage(pres)
        self.ab = abutment
        self.r0 = pres.r
        self.r_max = r_max
        self.max_candidates = max_candidates
        self.max_branches = max_branches
        for r in range(self.r0, r_max + 1):
            if pres.delta_g(r) <= 0:
                raise PageError(f"d{r} does not raise the window functional (delta {pres.delta_g(r)})")
        self.guard = sum(pres.delta_g(r) for r in range(self.r0, r_max + 1))
        self.verify_bound = pres.bound - self.guard
        if self.verify_bound < min((page_g for page_g in map(self.page.g_of_key, self.page.cells)), default=0):
            raise PageError(f"window bound {pres.bound} leaves no verification region after guard {self.guard}")
        self.expected = abutment.expected()
        self.stats = {"branches": 0, "pruned": 0, "invalid": 0, "rejected": 0, "accepted": 0, "max_candidates": 0}
        self.patterns: list[Pattern] = []
        self.misses: list[Miss] = []
        self.vanish = [self.page.parse(m) for m in abutment.must_vanish]
        for e in self.vanish:
            if e not in self.page.index:
                raise PageError(f"must-vanish monomial {self.page.label(e)} lies outside the window")
        self.r_tail = self._tail_limit()

    def _tail_limit(self) -> int:
        keys = list(self.page.cells)
        if not keys:
            return self.r_max
        span = max(self.page.g_of_key(k) for k in keys) - min(self.page.g_of_key(k) for k in keys)
        r = self.r_max
        while r < self.r_max + span + 2 and self.pres.delta_g(r + 1) <= span:
            r += 1
        return r

    # -- counting -----------------------------------------------------------
    def counts(self, state: PageState) -> dict:
        out: dict = {}
        for key in self.page.cells:
            if self.page.g_of_key(key) > self.verify_bound:
                continue
            n = self.page.degree_of_key(key)
            k = (n, key[2]) if self.ab.by_weight else n
            out[k] = out.get(k, 0) + state.dim(key)
        return out

    def distance(self, counts: dict) -> int:
        return sum(abs(counts.get(k, 0) - v) for k, v in self.expected.items())

    def prunable(self, state: PageState) -> bool:
        c = self.counts(state)
        return any(c.get(k, 0) < v for k, v in self.expected.items())

    def verdict(self, state: PageState) -> tuple[bool, str, int]:
        page = self.page
        bad_taint = [k for k in state.tainted if k in page.cells and page.g_of_key(k) <= self.verify_bound]
        if bad_taint:
            return False, f"window edge reaches cell {sorted(bad_taint)[0]}", 1 + len(bad_taint)
        c = self.counts(state)
        dist = self.distance(c)
        if dist:
            return False, "E_infinity dimensions differ from the abutment", dist
        verified = {k[0] if isinstance(k, tuple) else k for k in self.expected}
        for key in page.cells:
            g = page.g_of_key(key)
            if self.verify_bound < g and key not in state.tainted and page.degree_of_key(key) in verified:
                if state.dim(key):
                    return False, f"survivor in the guard band at {key}", 1
        if self.ab.weight_divisible_by:
            for key in page.cells:
                if page.g_of_key(key) <= self.verify_bound and state.dim(key) and key[2] % self.ab.weight_divisible_by:
                    return False, f"class of weight {key[2]} survives", 1
        for e in self.vanish:
            if page.key_of(e) in state.tainted or not _monomial_class_zero(page, state, e):
                return False, f"{page.label(e)} does not vanish", 1
        return True, "", 0

    # -- search ---------------------------------------------------------------
    def run(self) -> SearchReport:
        self._dfs(self.r0, PageState.initial(self.page), ())
        self.patterns.sort(key=Pattern.key)
        self.misses.sort(key=lambda m: (m.distance, tuple((d.r, d.source, d.target) for d in m.pattern)))
        return SearchReport(self.patterns, self.stats, self.misses[:3], self.pres.bound, self.guard, self.verify_bound)

    def _options(self, state: PageState, r: int):
        cands = candidates(self.page, state, r)
        self.stats["max_candidates"] = max(self.stats["max_candidates"], len(cands))
        if len(cands) > self.max_candidates:
            raise ResourceError(f"{len(cands)} candidate differentials on page {r} (limit {self.max_candidates})")
        by_gen: dict[str, list] = {}
        for name, e in cands:
            by_gen.setdefault(name, []).append(e)
        names = sorted(by_gen)
        return names, [[None] + by_gen[n] for n in names]

    def _differential(self, r: int, name: str, e: tuple) -> Differential:
        page = self.page
        lexp = None
        if page.L is not None:
            i = page.names.index(name)
            g = page.gens[i]
            s1, _ = page.bidegree(e)
            if page.L.s:
                lexp = (g.s + r - s1) // page.L.s
            else:
                lexp = (g.t + 1 - r - page.bidegree(e)[1]) // page.L.t
        return Differential(r, name, page.label(e), 1, lexp)

    def _dfs(self, r: int, state: PageState, chosen: tuple):
        if r > self.r_max:
            self._finish(state, chosen)
            return
        names, opts = self._options(state, r)
        for combo in itertools.product(*opts):
            self.stats["branches"] += 1
            if self.stats["branches"] > self.max_branches:
                raise ResourceError(f"search exceeded {self.max_branches} branches")
            assign = {}
            new_diffs = []
            for name, e in zip(names, combo):
                if e is None:
                    continue
                i = self.page.names.index(name)
                assign[i] = (1, e)
                new_diffs.append(self._differential(r, name, e))
            pattern = chosen + tuple(new_diffs)
            new_state, err = turn(self.page, state, assign, r)
            if err:
                self.stats["invalid"] += 1
                continue
            if self.prunable(new_state):
                self.stats["pruned"] += 1
                self.misses.append(Miss(pattern, self.distance(self.counts(new_state)), f"pruned after page {r}"))
                continue
            self._dfs(r + 1, new_state, pattern)

    def _finish(self, state: PageState, pattern: tuple):
        for r in range(self.r_max + 1, self.r_tail + 1):
            if candidates(self.page, state, r):
                self.stats["rejected"] += 1
                self.misses.append(Miss(pattern, 1, f"possible differentials remain on page {r}"))
                return
        ok, reason, dist = self.verdict(state)
        if not ok:
            self.stats["rejected"] += 1
            self.misses.append(Miss(pattern, dist, reason))
            return
        self.stats["accepted"] += 1
        table = {k: state.dim(k) for k in self.page.cells
                 if self.page.g_of_key(k) <= self.verify_bound and state.dim(k)}
        labels = {k: survivors(self.page, state, k) for k in table}
        space = _space(self.page, table, self.verify_bound, labels)
        # a degree is complete when nothing of it survives past the verification region
        degs = {self.page.degree_of_key(k) for k in self.page.cells}
        open_degs = {self.page.degree_of_key(k) for k in self.page.cells
                     if self.page.g_of_key(k) > self.verify_bound and state.dim(k) and k not in state.tainted}
        done = degs - open_degs
        if self.ab.degrees and not self.ab.periodic:
            # abutment degrees that no monomial can reach are zero outright
            reach = attainable_degrees(self.pres, min(self.ab.degrees), max(self.ab.degrees))
            if reach is not None:
                done |= {n for n in self.ab.degrees if n not in reach}
        done = sorted(done)
        if done:
            lo, hi = done[0], done[-1]
            space = GradedSpace(space.cells, Window(lo, hi),
                                indeterminate_degrees=frozenset(n for n in range(lo, hi + 1) if n not in done))
        self.patterns.append(Pattern(pattern, space, self.counts(state)))


def forced_search(pres: PagePresentation, abutment: AbutmentSpec, r_max: int,
                  max_candidates: int = 20, max_branches: int = 100_000,
                  raise_on_empty: bool = True) -> SearchReport:
    """Every generator-level differential pattern on pages pres.r..r_max whose
    E_infinity matches the abutment in the verification region."""
    report = _Search(pres, abutment, r_max, max_candidates, max_branches).run()
    if not report.patterns and raise_on_empty:
        raise AbutmentUnreachable(report)
    return report


def replay(pres: PagePresentation, pattern: Sequence[Differential], r_max: int) -> PageState:
    """Turn pages pres.r..r_max with the given differentials."""
    page = ExpandedPage(pres)
    state = PageState.initial(page)
    for r in range(pres.r, r_max + 1):
        diffs = {d.source: (d.target, d.scalar) for d in pattern if d.r == r}
        state, err = turn(page, state, page.resolve(r, diffs), r, strict=True)
    return state


# -- Tate page -----------------------------------------------------------------

@dataclass
class TatePage:
    """E_2 = HH_* (x) P(T^{+-1}) with d_2 induced by Connes' B on homology."""

    hh: object
    d2: dict  # (n, w) -> FpMatrix HH_n^w -> HH_(n+1)^w

    def is_degenerate(self) -> bool:
        return all(m.is_zero() for m in self.d2.values())

    def nonzero(self) -> list[tuple[int, int]]:
        return sorted(k for k, m in self.d2.items() if not m.is_zero())

    def e3_dims(self) -> dict[tuple[int, int], int]:
        out = {}
        top = self.hh.max_degree - 1
        for (n, w), d in self.hh.dims.items():
            if n > top or not d:
                continue
            out_rank = rank(self.d2[(n, w)]) if (n, w) in self.d2 else 0
            in_rank = rank(self.d2[(n - 1, w)]) if (n - 1, w) in self.d2 else 0
            if d - out_rank - in_rank:
                out[(n, w)] = d - out_rank - in_rank
        return out


def tate_page(hh, window: Window | None = None) -> TatePage:
    """Build the Tate E_2 page from a bar-model HHResult with representatives."""
    from .hochschild import B_on_homology

    top = hh.max_degree - 1
    if window is not None:
        top = min(top, -window.deg_min)
    d2 = {}
    for (n, w), d in sorted(hh.dims.items()):
        if n > top or not d:
            continue
        if window is not None and window.weight_max is not None and w > window.weight_max:
            continue
        if hh.dims.get((n + 1, w), 0) == 0:
            d2[(n, w)] = FpMatrix.zeros(0, d, hh.p)
            continue
        d2[(n, w)] = B_on_homology(hh, n, w)
    return TatePage(hh, d2)

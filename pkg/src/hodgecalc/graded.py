"""Trigraded spaces, cochain complexes, bicomplexes and their cohomology."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .fp import FpMatrix, hstack, kernel_basis, rank, rref, solve


class GradeIndex(NamedTuple):
    deg: int
    wedge: int = 0
    weight: int = 0

    def __add__(self, other):  # type: ignore[override]
        return GradeIndex(self.deg + other.deg, self.wedge + other.wedge, self.weight + other.weight)

    @property
    def parity(self) -> int:
        return (self.deg + self.wedge) % 2


class _Indeterminate:
    """Marker for a value the current window cannot determine."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INDETERMINATE"

    def __bool__(self):
        raise TypeError("INDETERMINATE has no truth value; compare with `is INDETERMINATE`")

    def __reduce__(self):
        return (_Indeterminate, ())


INDETERMINATE = _Indeterminate()


class ComplexError(ValueError):
    pass


class NonCommutingSquareError(ComplexError):
    def __init__(self, degree: int):
        super().__init__(f"chain map does not commute with differentials in degree {degree}")
        self.degree = degree


@dataclass(frozen=True)
class Window:
    deg_min: int
    deg_max: int
    weight_max: int | None = None
    weight_min: int | None = None

    def __post_init__(self):
        if self.deg_min > self.deg_max:
            raise ValueError(f"empty window: deg_min {self.deg_min} > deg_max {self.deg_max}")

    def degrees(self) -> range:
        return range(self.deg_min, self.deg_max + 1)

    def contains(self, g: GradeIndex) -> bool:
        if not self.deg_min <= g.deg <= self.deg_max:
            return False
        if self.weight_max is not None and g.weight > self.weight_max:
            return False
        if self.weight_min is not None and g.weight < self.weight_min:
            return False
        return True

    def as_dict(self) -> dict:
        out = {"deg_min": self.deg_min, "deg_max": self.deg_max}
        if self.weight_max is not None:
            out["weight_max"] = self.weight_max
        if self.weight_min is not None:
            out["weight_min"] = self.weight_min
        return out


@dataclass(frozen=True)
class GradedSpace:
    """Finite-dimensional pieces indexed by GradeIndex, valid inside `window`.

    Grades listed in `indeterminate` are unknown; `dim` reports them as
    INDETERMINATE instead of 0.  With `indeterminate_degrees` a whole degree
    is unknown regardless of wedge and weight.
    """

    cells: Mapping[GradeIndex, tuple[int, tuple[str, ...]]]
    window: Window
    indeterminate: frozenset = frozenset()
    indeterminate_degrees: frozenset = frozenset()

    def __post_init__(self):
        clean = {}
        for g, (d, labels) in self.cells.items():
            g = GradeIndex(*g)
            if d < 0:
                raise ValueError(f"negative dimension at {g}")
            labels = tuple(labels)
            if labels and len(labels) != d:
                raise ValueError(f"{len(labels)} labels for dimension {d} at {g}")
            if d:
                clean[g] = (d, labels)
        object.__setattr__(self, "cells", dict(sorted(clean.items())))
        object.__setattr__(self, "indeterminate", frozenset(GradeIndex(*g) for g in self.indeterminate))
        object.__setattr__(self, "indeterminate_degrees", frozenset(self.indeterminate_degrees))

    @classmethod
    def from_dims(cls, dims: Mapping[tuple, int], window: Window, **kw) -> "GradedSpace":
        return cls({GradeIndex(*g): (d, ()) for g, d in dims.items()}, window, **kw)

    def is_known(self, g: GradeIndex) -> bool:
        g = GradeIndex(*g)
        return g not in self.indeterminate and g.deg not in self.indeterminate_degrees and self.window.contains(g)

    def dim(self, g) -> int | _Indeterminate:
        g = GradeIndex(*g)
        if not self.is_known(g):
            return INDETERMINATE
        return self.cells.get(g, (0, ()))[0]

    def labels(self, g) -> tuple[str, ...]:
        return self.cells.get(GradeIndex(*g), (0, ()))[1]

    def degree_dim(self, n: int) -> int | _Indeterminate:
        if n in self.indeterminate_degrees or not self.window.deg_min <= n <= self.window.deg_max:
            return INDETERMINATE
        if any(g.deg == n for g in self.indeterminate):
            return INDETERMINATE
        return sum(d for g, (d, _) in self.cells.items() if g.deg == n)

    def degree_dims(self) -> dict[int, int | _Indeterminate]:
        return {n: self.degree_dim(n) for n in self.window.degrees()}

    def weights_in_degree(self, n: int) -> dict[int, int]:
        out: dict[int, int] = {}
        for g, (d, _) in self.cells.items():
            if g.deg == n:
                out[g.weight] = out.get(g.weight, 0) + d
        return out

    def grades(self) -> list[GradeIndex]:
        return list(self.cells)

    def total_dim(self) -> int:
        return sum(d for d, _ in self.cells.values())

    def dims_table(self) -> dict[GradeIndex, int]:
        return {g: d for g, (d, _) in self.cells.items()}

    def to_rows(self) -> list[dict]:
        """Rows for the JSON/CSV report: one per nonzero or indeterminate grade."""
        rows = []
        keys = sorted(set(self.cells) | set(self.indeterminate))
        for g in keys:
            d = self.dim(g)
            rows.append({
                "deg": g.deg,
                "wedge": g.wedge,
                "weight": g.weight,
                "dim": "indeterminate" if d is INDETERMINATE else d,
                "labels": list(self.labels(g)),
            })
        for n in sorted(self.indeterminate_degrees):
            rows.append({"deg": n, "wedge": None, "weight": None, "dim": "indeterminate", "labels": []})
        return rows

    def restrict(self, window: Window) -> "GradedSpace":
        cells = {g: v for g, v in self.cells.items() if window.contains(g)}
        return GradedSpace(cells, window, self.indeterminate, self.indeterminate_degrees)


@dataclass(frozen=True)
class CochainComplex:
    """Cochain complex over F_p concentrated in degrees `lo..hi`.

    `d[n]` is the matrix of d^n : C^n -> C^{n+1} (shape dims[n+1] x dims[n]).
    If `lower_closed` is False the complex may continue below `lo`, so H^lo
    is unknown; likewise `upper_closed` for `hi`.  Degrees in `unstable` are
    always reported as indeterminate.
    """

    p: int
    dims: Mapping[int, int]
    d: Mapping[int, FpMatrix]
    weights: Mapping[int, Sequence[int]] | None = None
    labels: Mapping[int, Sequence[str]] | None = None
    wedge: int = 0
    lower_closed: bool = True
    upper_closed: bool = True
    unstable: frozenset = frozenset()

    def __post_init__(self):
        dims = {int(n): int(v) for n, v in self.dims.items()}
        object.__setattr__(self, "dims", dims)
        for n, m in self.d.items():
            if m.p != self.p:
                raise ComplexError(f"differential in degree {n} is over F_{m.p}, complex over F_{self.p}")
            if m.shape != (dims.get(n + 1, 0), dims.get(n, 0)):
                raise ComplexError(f"differential d^{n} has shape {m.shape}, expected {(dims.get(n + 1, 0), dims.get(n, 0))}")
        if self.weights is not None:
            for n, ws in self.weights.items():
                if len(ws) != dims.get(n, 0):
                    raise ComplexError(f"weight list in degree {n} has wrong length")
            for n, m in self.d.items():
                self._check_weight_zero(n, m)
        self.check_square_zero()

    @property
    def lo(self) -> int:
        return min(self.dims) if self.dims else 0

    @property
    def hi(self) -> int:
        return max(self.dims) if self.dims else 0

    def dim(self, n: int) -> int:
        return self.dims.get(n, 0)

    def diff(self, n: int) -> FpMatrix:
        m = self.d.get(n)
        if m is None:
            return FpMatrix.zeros(self.dim(n + 1), self.dim(n), self.p)
        return m

    def _check_weight_zero(self, n: int, m: FpMatrix):
        src = np.asarray(self.weights.get(n, ()), dtype=np.int64)
        tgt = np.asarray(self.weights.get(n + 1, ()), dtype=np.int64)
        rows, cols = np.nonzero(m.data)
        if rows.size and np.any(src[cols] != tgt[rows]):
            i = int(np.flatnonzero(src[cols] != tgt[rows])[0])
            raise ComplexError(f"d^{n} does not preserve weight (entry {rows[i]},{cols[i]})")

    def check_square_zero(self):
        for n in sorted(self.d):
            if n + 1 in self.d:
                if not (self.d[n + 1] @ self.d[n]).is_zero():
                    raise ComplexError(f"d^{n + 1} d^{n} != 0")

    def euler_characteristic(self) -> int:
        return sum((-1) ** (n % 2) * v for n, v in self.dims.items())

    def determinable(self, n: int) -> bool:
        if n in self.unstable:
            return False
        if not self.dims:
            return True
        if n < self.lo:
            return self.lower_closed
        if n > self.hi:
            return self.upper_closed
        if n == self.lo and not self.lower_closed:
            return False
        if n == self.hi and not self.upper_closed:
            return False
        return True

    def weight_blocks(self, n: int) -> dict[int, np.ndarray]:
        if self.weights is None:
            return {0: np.arange(self.dim(n))}
        ws = np.asarray(self.weights.get(n, ()), dtype=np.int64)
        return {int(w): np.flatnonzero(ws == w) for w in np.unique(ws)}


def _weight_of(c: CochainComplex, n: int, i: int) -> int:
    return 0 if c.weights is None else int(c.weights[n][i])


def cohomology_basis(c: CochainComplex, n: int) -> tuple[FpMatrix, FpMatrix]:
    """(cocycles, representatives) in degree n.

    Representatives are the kernel basis vectors not in the span of the image
    plus earlier ones, scanned in kernel order, so the choice is canonical.
    """
    p = c.p
    dn = c.diff(n)
    ker = kernel_basis(dn) if c.dim(n) else FpMatrix.zeros(0, 0, p)
    im = c.diff(n - 1)
    reps = []
    if ker.cols:
        aug = hstack([im, ker])
        _, piv = rref(aug)
        reps = [j - im.cols for j in piv if j >= im.cols]
    cols = [ker.column(j) for j in reps]
    return ker, FpMatrix.from_columns(cols, c.dim(n), p)


def cohomology_dims_by_weight(c: CochainComplex, n: int) -> dict[int, int]:
    """dim H^n split by weight, computed blockwise."""
    out = {}
    dn = c.diff(n)
    dprev = c.diff(n - 1)
    src_blocks = c.weight_blocks(n)
    tgt_next = c.weight_blocks(n + 1) if c.weights is not None else None
    prev_blocks = c.weight_blocks(n - 1) if c.weights is not None else None
    for w, idx in src_blocks.items():
        if idx.size == 0:
            continue
        if c.weights is None:
            rows_next = np.arange(c.dim(n + 1))
            cols_prev = np.arange(c.dim(n - 1))
        else:
            rows_next = tgt_next.get(w, np.zeros(0, dtype=np.int64))
            cols_prev = prev_blocks.get(w, np.zeros(0, dtype=np.int64))
        r_out = rank(FpMatrix._wrap(dn.data[np.ix_(rows_next, idx)].copy(), c.p)) if rows_next.size else 0
        r_in = rank(FpMatrix._wrap(dprev.data[np.ix_(idx, cols_prev)].copy(), c.p)) if cols_prev.size else 0
        h = idx.size - r_out - r_in
        if h:
            out[w] = h
    return out


def _vector_label(vec: np.ndarray, names: Sequence[str] | None) -> str:
    terms = []
    for i in np.flatnonzero(vec):
        name = names[i] if names else f"e{i}"
        coef = int(vec[i])
        terms.append(name if coef == 1 else f"{coef}*{name}")
    return " + ".join(terms) if terms else "0"


def cohomology(c: CochainComplex, w: Window, representatives: bool = True) -> GradedSpace:
    """Cohomology of `c` in the degrees of `w`, split by weight.

    Degrees the complex cannot determine come back as INDETERMINATE.
    """
    cells: dict[GradeIndex, tuple[int, tuple[str, ...]]] = {}
    unknown = set()
    for n in w.degrees():
        if not c.determinable(n):
            unknown.add(n)
            continue
        if representatives and c.dim(n):
            _, reps = cohomology_basis(c, n)
            by_weight: dict[int, list[str]] = {}
            for j in range(reps.cols):
                v = reps.column(j)
                lead = int(np.flatnonzero(v)[0])
                wt = _weight_of(c, n, lead)
                names = c.labels.get(n) if c.labels else None
                by_weight.setdefault(wt, []).append(_vector_label(v, names))
            for wt, labs in by_weight.items():
                g = GradeIndex(n, c.wedge, wt)
                if w.contains(g):
                    cells[g] = (len(labs), tuple(labs))
        else:
            for wt, h in cohomology_dims_by_weight(c, n).items():
                g = GradeIndex(n, c.wedge, wt)
                if w.contains(g):
                    cells[g] = (h, ())
    return GradedSpace(cells, w, indeterminate_degrees=frozenset(unknown))


@dataclass(frozen=True)
class ChainMap:
    source: CochainComplex
    target: CochainComplex
    maps: Mapping[int, FpMatrix]

    def at(self, n: int) -> FpMatrix:
        m = self.maps.get(n)
        if m is None:
            return FpMatrix.zeros(self.target.dim(n), self.source.dim(n), self.source.p)
        return m

    def check(self):
        degrees = set(self.source.dims) | set(self.target.dims)
        for n in sorted(degrees):
            lhs = self.target.diff(n) @ self.at(n)
            rhs = self.at(n + 1) @ self.source.diff(n)
            if lhs != rhs:
                raise NonCommutingSquareError(n)


def shift(c: CochainComplex, k: int) -> CochainComplex:
    """c[k]: degree n of the result is degree n+k of c, differential negated for odd k."""
    sign = -1 if k % 2 else 1
    return CochainComplex(
        c.p,
        {n - k: v for n, v in c.dims.items()},
        {n - k: m.scale(sign) for n, m in c.d.items()},
        None if c.weights is None else {n - k: ws for n, ws in c.weights.items()},
        None if c.labels is None else {n - k: ls for n, ls in c.labels.items()},
        c.wedge,
    )


def mapping_fiber(f: ChainMap) -> CochainComplex:
    """fib(f)^n = X^n + Y^(n-1) with d(x, y) = (dx, f(x) - dy)."""
    f.check()
    X, Y = f.source, f.target
    p = X.p
    degrees = set(X.dims) | {n + 1 for n in Y.dims}
    dims = {n: X.dim(n) + Y.dim(n - 1) for n in degrees}
    d = {}
    for n in sorted(degrees):
        if n + 1 not in dims:
            continue
        top = hstack([X.diff(n), FpMatrix.zeros(X.dim(n + 1), Y.dim(n - 1), p)])
        bottom = hstack([f.at(n), -Y.diff(n - 1)])
        blk = np.vstack([top.data, bottom.data])
        d[n] = FpMatrix(blk.reshape(dims[n + 1], dims[n]), p)
    weights = None
    if X.weights is not None and Y.weights is not None:
        weights = {n: list(X.weights.get(n, [])) + list(Y.weights.get(n - 1, [])) for n in degrees}
    labels = None
    if X.labels is not None and Y.labels is not None:
        labels = {n: list(X.labels.get(n, [])) + [f"s({l})" for l in Y.labels.get(n - 1, [])] for n in degrees}
    return CochainComplex(p, dims, d, weights, labels, X.wedge)


def kunneth(a: GradedSpace, b: GradedSpace, lower_bounded: bool = True) -> GradedSpace:
    """Tensor product of graded spaces: dims convolve in (deg, wedge, weight).

    When both inputs vanish below their windows (`lower_bounded`), the result
    is exact in degrees up to min(a.max + b.min, b.max + a.min).
    """
    wa, wb = a.window, b.window
    deg_min = wa.deg_min + wb.deg_min
    deg_max = min(wa.deg_max + wb.deg_min, wb.deg_max + wa.deg_min) if lower_bounded else wa.deg_max + wb.deg_max
    wmax = None
    if wa.weight_max is not None and wb.weight_max is not None:
        wmax = wa.weight_max + wb.weight_max
    window = Window(deg_min, deg_max, wmax)
    cells: dict[GradeIndex, list] = {}
    for ga, (da, la) in a.cells.items():
        for gb, (db, lb) in b.cells.items():
            g = ga + gb
            if not window.deg_min <= g.deg <= window.deg_max:
                continue
            dim, labels = cells.get(g, (0, []))
            if la and lb:
                labels = labels + [_tensor_label(x, y) for x in la for y in lb]
            cells[g] = (dim + da * db, labels)
    out = {}
    for g, (dim, labels) in cells.items():
        out[g] = (dim, tuple(labels) if len(labels) == dim else ())
    unknown = set()
    for ga in a.indeterminate:
        for gb in b.cells:
            unknown.add(ga + gb)
    for gb in b.indeterminate:
        for ga in a.cells:
            unknown.add(ga + gb)
    bad_deg = {x + y.deg for x in a.indeterminate_degrees for y in b.cells}
    bad_deg |= {x + y.deg for x in b.indeterminate_degrees for y in a.cells}
    return GradedSpace(out, window, frozenset(unknown), frozenset(bad_deg))


def _tensor_label(x: str, y: str) -> str:
    if x == "1":
        return y
    if y == "1":
        return x
    return f"{x}*{y}"


@dataclass(frozen=True)
class Bicomplex:
    """Cells (i, j) of total degree i + j; dh: (i,j)->(i+1,j), dv: (i,j)->(i,j+1).

    `open_right` means the true bicomplex continues past the largest column
    present, so totalization must be checked for stability against it.
    """

    p: int
    dims: Mapping[tuple[int, int], int]
    dh: Mapping[tuple[int, int], FpMatrix]
    dv: Mapping[tuple[int, int], FpMatrix]
    weights: Mapping[tuple[int, int], Sequence[int]] | None = None
    open_right: bool = False

    def __post_init__(self):
        dims = {(int(i), int(j)): int(v) for (i, j), v in self.dims.items() if v}
        object.__setattr__(self, "dims", dims)
        for (i, j), m in self.dh.items():
            if m.shape != (self.dim(i + 1, j), self.dim(i, j)):
                raise ComplexError(f"horizontal map at {(i, j)} has shape {m.shape}")
        for (i, j), m in self.dv.items():
            if m.shape != (self.dim(i, j + 1), self.dim(i, j)):
                raise ComplexError(f"vertical map at {(i, j)} has shape {m.shape}")
        for (i, j) in dims:
            h2 = self._h(i + 1, j) @ self._h(i, j)
            v2 = self._v(i, j + 1) @ self._v(i, j)
            if not h2.is_zero() or not v2.is_zero():
                raise ComplexError(f"bicomplex differential squares to nonzero at {(i, j)}")
            anti = self._v(i + 1, j) @ self._h(i, j) + self._h(i, j + 1) @ self._v(i, j)
            if not anti.is_zero():
                raise ComplexError(f"horizontal and vertical maps do not anticommute at {(i, j)}")

    def dim(self, i: int, j: int) -> int:
        return self.dims.get((i, j), 0)

    def _h(self, i, j) -> FpMatrix:
        m = self.dh.get((i, j))
        return m if m is not None else FpMatrix.zeros(self.dim(i + 1, j), self.dim(i, j), self.p)

    def _v(self, i, j) -> FpMatrix:
        m = self.dv.get((i, j))
        return m if m is not None else FpMatrix.zeros(self.dim(i, j + 1), self.dim(i, j), self.p)

    def columns(self) -> list[int]:
        return sorted({i for i, _ in self.dims})

    def drop_columns_above(self, k: int) -> "Bicomplex":
        keep = {c: v for c, v in self.dims.items() if c[0] <= k}
        dh = {c: m for c, m in self.dh.items() if c[0] + 1 <= k and c in keep}
        dv = {c: m for c, m in self.dv.items() if c in keep}
        ws = None if self.weights is None else {c: v for c, v in self.weights.items() if c in keep}
        return Bicomplex(self.p, keep, dh, dv, ws, self.open_right)


def _total(b: Bicomplex, lo: int, hi: int) -> tuple[CochainComplex, dict]:
    cells_by_deg: dict[int, list[tuple[int, int]]] = {}
    for (i, j) in sorted(b.dims):
        n = i + j
        if lo - 1 <= n <= hi + 1:
            cells_by_deg.setdefault(n, []).append((i, j))
    offsets = {}
    dims = {}
    for n, cells in cells_by_deg.items():
        off = 0
        for c in cells:
            offsets[c] = off
            off += b.dim(*c)
        dims[n] = off
    d = {}
    for n in dims:
        if n + 1 not in dims:
            continue
        m = np.zeros((dims[n + 1], dims[n]), dtype=np.int64)
        for (i, j) in cells_by_deg[n]:
            c0 = offsets[(i, j)]
            w = b.dim(i, j)
            for tgt, mat in (((i + 1, j), b._h(i, j)), ((i, j + 1), b._v(i, j))):
                if tgt in offsets and mat.rows:
                    r0 = offsets[tgt]
                    m[r0:r0 + mat.rows, c0:c0 + w] = (m[r0:r0 + mat.rows, c0:c0 + w] + mat.data) % b.p
        d[n] = FpMatrix._wrap(m, b.p)
    weights = None
    if b.weights is not None:
        weights = {n: [x for c in cells_by_deg[n] for x in b.weights[c]] for n in dims}
    return CochainComplex(b.p, dims, d, weights, lower_closed=False, upper_closed=False), dims


def totalize_bicomplex(b: Bicomplex, w: Window) -> tuple[CochainComplex, GradedSpace]:
    """Direct-sum totalization restricted to the window, plus its cohomology.

    If the bicomplex is open to the right, cohomology is recomputed with the
    last column removed and degrees whose dimension changes are reported
    INDETERMINATE.
    """
    tot, _ = _total(b, w.deg_min, w.deg_max)
    h = cohomology(CochainComplex(tot.p, tot.dims, tot.d, tot.weights), w, representatives=False)
    unknown = set(h.indeterminate_degrees)
    if b.open_right and b.columns():
        smaller, _ = _total(b.drop_columns_above(b.columns()[-1] - 1), w.deg_min, w.deg_max)
        h2 = cohomology(CochainComplex(smaller.p, smaller.dims, smaller.d, smaller.weights), w, representatives=False)
        for n in w.degrees():
            if h.weights_in_degree(n) != h2.weights_in_degree(n):
                unknown.add(n)
    unstable_cells = {g: v for g, v in h.cells.items() if g.deg not in unknown}
    return tot, GradedSpace(unstable_cells, w, indeterminate_degrees=frozenset(unknown))


def complex_from_maps(p: int, maps: Sequence[FpMatrix], start: int = 0) -> CochainComplex:
    """C^start -> C^(start+1) -> ... from consecutive matrices."""
    dims = {}
    d = {}
    for k, m in enumerate(maps):
        n = start + k
        dims[n] = m.cols
        dims[n + 1] = m.rows
        d[n] = m
    return CochainComplex(p, dims, d)


def in_span(vectors: FpMatrix, v) -> bool:
    return solve(vectors, v) is not None

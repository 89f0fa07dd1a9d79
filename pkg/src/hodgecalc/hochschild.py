"""Hochschild homology, the Connes operator and windowed cyclic homology."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import PresentedAlgebra, adapted, as_truncated_poly, frobenius_on_algebra
from .ext import ResourceError
from .fp import FpMatrix, hstack, kernel_basis, rank, rref, solve
from .graded import (
    INDETERMINATE,
    Bicomplex,
    GradedSpace,
    GradeIndex,
    Window,
    totalize_bicomplex,
)

DEFAULT_BUDGET = 10**6


def _coo_block(coo, src_idx: np.ndarray, tgt_idx: np.ndarray, p: int) -> FpMatrix:
    """Dense matrix of a sparse map restricted to source/target index sets
    (both sorted)."""
    r, c, v = coo
    m = np.zeros((tgt_idx.size, src_idx.size), dtype=np.int64)
    if r.size and src_idx.size and tgt_idx.size:
        cpos = np.searchsorted(src_idx, c)
        cpos[cpos >= src_idx.size] = 0
        keep = src_idx[cpos] == c
        rpos = np.searchsorted(tgt_idx, r[keep])
        rpos[rpos >= tgt_idx.size] = 0
        ok = tgt_idx[rpos] == r[keep]
        if not ok.all():
            raise ValueError("map does not preserve the chosen blocks")
        np.add.at(m, (rpos, cpos[keep]), v[keep])
    return FpMatrix(m, p)


class BarComplex:
    """Normalized Hochschild complex C_n = A (x) Abar^(x n).

    Basis element (a0, t_1..t_n) has index a0 * q^n + code(t), where t_i
    indexes the augmentation-ideal part of an adapted basis.
    """

    def __init__(self, algebra: PresentedAlgebra, max_degree: int, budget: int = DEFAULT_BUDGET):
        A = algebra if algebra.is_adapted() else adapted(algebra)
        self.A = A
        self.p = A.p
        self.max_degree = max_degree
        self.q = A.dim - 1
        for n in range(max_degree + 2):
            if self.q ** n > budget:
                raise ResourceError(f"Hochschild chains in degree {n} need {self.q ** n} tensors (budget {budget})")
        if self.q and A.mult[1:, 1:, 0].any():
            raise ValueError("augmentation ideal is not closed under multiplication")
        self._aw = np.asarray(A.weights, dtype=np.int64)
        self._b: dict[int, tuple] = {}
        self._B: dict[int, tuple] = {}
        self._weights: dict[int, np.ndarray] = {}

    def size(self, n: int) -> int:
        return self.A.dim * self.q ** n if n >= 0 else 0

    def tuples(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """(a0, t) for every basis element of C_n, in index order."""
        N = self.size(n)
        idx = np.arange(N, dtype=np.int64)
        t = np.zeros((N, n), dtype=np.int64)
        rest = idx.copy()
        for pos in range(n - 1, -1, -1):
            t[:, pos] = rest % self.q
            rest //= self.q
        return rest, t

    def encode(self, a0: np.ndarray, t: np.ndarray) -> np.ndarray:
        code = np.asarray(a0, dtype=np.int64).copy()
        for pos in range(t.shape[1]):
            code = code * self.q + t[:, pos]
        return code

    def weights(self, n: int) -> np.ndarray:
        if n not in self._weights:
            a0, t = self.tuples(n)
            w = self._aw[a0] + (self._aw[1 + t].sum(axis=1) if n else 0)
            self._weights[n] = w
        return self._weights[n]

    def blocks(self, n: int) -> dict[int, np.ndarray]:
        w = self.weights(n)
        return {int(x): np.flatnonzero(w == x) for x in np.unique(w)}

    def b_coo(self, n: int):
        """Sparse b: C_n -> C_(n-1) as (rows, cols, values)."""
        if n in self._b:
            return self._b[n]
        A, q, p = self.A, self.q, self.p
        rows, cols, vals = [], [], []
        if n >= 1 and q:
            a0, t = self.tuples(n)
            src = np.arange(a0.size, dtype=np.int64)

            def emit(coef, new_a0, new_t, sign):
                nz = np.flatnonzero(coef)
                if nz.size:
                    rows.append(self.encode(new_a0[nz], new_t[nz]))
                    cols.append(src[nz])
                    vals.append(sign * coef[nz])

            for c in range(A.dim):
                full = np.full(a0.size, c, dtype=np.int64)
                emit(A.mult[a0, 1 + t[:, 0], c], full, t[:, 1:], 1)
                emit(A.mult[1 + t[:, n - 1], a0, c], full, t[:, :n - 1], (-1) ** n)
            for i in range(1, n):
                for c in range(q):
                    coef = A.mult[1 + t[:, i - 1], 1 + t[:, i], 1 + c]
                    new_t = np.concatenate([t[:, :i - 1], np.full((a0.size, 1), c), t[:, i + 1:]], axis=1)
                    emit(coef, a0, new_t, (-1) ** i)
        out = self._pack(rows, cols, vals)
        self._b[n] = out
        return out

    def B_coo(self, n: int):
        """Sparse normalized Connes operator C_n -> C_(n+1):
        B(a0[a1|..|an]) = sum_i (-1)^(n i) [a_i|..|a_n|a_0|..|a_(i-1)]."""
        if n in self._B:
            return self._B[n]
        rows, cols, vals = [], [], []
        if n >= 0 and self.q:
            a0, t = self.tuples(n)
            src = np.arange(a0.size, dtype=np.int64)
            keep = np.flatnonzero(a0 > 0)
            L = np.concatenate([(a0[keep] - 1).reshape(-1, 1), t[keep]], axis=1)
            for i in range(n + 1):
                rot = np.concatenate([L[:, i:], L[:, :i]], axis=1)
                rows.append(self.encode(np.zeros(keep.size, dtype=np.int64), rot))
                cols.append(src[keep])
                vals.append(np.full(keep.size, (-1) ** (n * i), dtype=np.int64))
        out = self._pack(rows, cols, vals)
        self._B[n] = out
        return out

    def _pack(self, rows, cols, vals):
        if not rows:
            z = np.zeros(0, dtype=np.int64)
            return z, z, z
        return (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals) % self.p)

    def b_block(self, n: int, w: int) -> FpMatrix:
        src = self.blocks(n).get(w, np.zeros(0, dtype=np.int64))
        tgt = self.blocks(n - 1).get(w, np.zeros(0, dtype=np.int64)) if n >= 1 else np.zeros(0, dtype=np.int64)
        if n < 1:
            return FpMatrix.zeros(0, src.size, self.p)
        return _coo_block(self.b_coo(n), src, tgt, self.p)

    def B_block(self, n: int, w: int) -> FpMatrix:
        src = self.blocks(n).get(w, np.zeros(0, dtype=np.int64))
        tgt = self.blocks(n + 1).get(w, np.zeros(0, dtype=np.int64))
        return _coo_block(self.B_coo(n), src, tgt, self.p)

    def check_identities(self, upto: int | None = None) -> bool:
        """b^2 = 0, B^2 = 0 and bB + Bb = 0 blockwise."""
        upto = self.max_degree if upto is None else upto
        for n in range(upto + 1):
            for w in self.blocks(n):
                b1 = self.b_block(n, w)
                if n >= 2 and not (self.b_block(n - 1, w) @ b1).is_zero():
                    raise ValueError(f"b^2 != 0 on C_{n} weight {w}")
                B1 = self.B_block(n, w)
                if not (self.B_block(n + 1, w) @ B1).is_zero():
                    raise ValueError(f"B^2 != 0 on C_{n} weight {w}")
                anti = self.b_block(n + 1, w) @ B1
                if n >= 1:
                    anti = anti + self.B_block(n - 1, w) @ b1
                if not anti.is_zero():
                    raise ValueError(f"bB + Bb != 0 on C_{n} weight {w}")
        return True


@dataclass
class HHResult:
    """HH_n split by weight, with optional representative cycles.

    `representatives[(n, w)]` has one column per class, in the coordinates
    of the weight-w block of C_n (or of the small model).
    """

    p: int
    max_degree: int
    dims: dict[tuple[int, int], int]
    weight_max: int | None = None
    representatives: dict[tuple[int, int], FpMatrix] = field(default_factory=dict)
    model: object = None

    def degree_dims(self) -> dict[int, int]:
        out = {n: 0 for n in range(self.max_degree + 1)}
        for (n, _), d in self.dims.items():
            out[n] += d
        return out

    def weight_table(self) -> dict[tuple[int, int], int]:
        return {k: v for k, v in sorted(self.dims.items()) if v}

    def to_graded(self) -> GradedSpace:
        """HH_n placed in cohomological degree -n."""
        cells = {GradeIndex(-n, 0, w): d for (n, w), d in self.dims.items() if d}
        wmax = self.weight_max if self.weight_max is not None else max((w for _, w in self.dims), default=0)
        return GradedSpace.from_dims(cells, Window(-self.max_degree, 0, wmax))


def _homology_reps(d_out: FpMatrix, d_in: FpMatrix, p: int) -> FpMatrix:
    ker = kernel_basis(d_out)
    if ker.cols == 0:
        return ker
    aug = hstack([d_in, ker])
    _, piv = rref(aug)
    cols = [ker.column(j - d_in.cols) for j in piv if j >= d_in.cols]
    return FpMatrix.from_columns(cols, ker.rows, p)


def hochschild_bar(a: PresentedAlgebra, max_degree: int, weight_max: int | None = None,
                   representatives: bool = False, budget: int = DEFAULT_BUDGET) -> HHResult:
    """HH_n(A) for n <= max_degree from the normalized bar complex."""
    bar = BarComplex(a, max_degree, budget)
    p = bar.p
    ranks: dict[tuple[int, int], int] = {}

    def rk(n, w):
        if (n, w) not in ranks:
            ranks[(n, w)] = rank(bar.b_block(n, w)) if n >= 1 else 0
        return ranks[(n, w)]

    dims: dict[tuple[int, int], int] = {}
    reps: dict[tuple[int, int], FpMatrix] = {}
    for n in range(max_degree + 1):
        for w, idx in bar.blocks(n).items():
            if weight_max is not None and w > weight_max:
                continue
            h = idx.size - rk(n, w) - rk(n + 1, w)
            dims[(n, w)] = h
            if representatives and h:
                reps[(n, w)] = _homology_reps(bar.b_block(n, w), bar.b_block(n + 1, w), p)
    return HHResult(p, max_degree, dims, weight_max, reps, bar)


class SmallModel:
    """The 2-periodic complex for k[t]/(t^n): A g_0 <-0- A g_1 <-f'- A g_2 <-0- ...

    g_(2i) has weight i*n*w and g_(2i-1) has weight (i-1)*n*w + w.
    """

    def __init__(self, a: PresentedAlgebra):
        info = as_truncated_poly(a)
        if info is None:
            raise ValueError("small model needs a truncated polynomial algebra")
        self.A = a
        self.n, self.t_index, self.w = info
        t = a.basis(self.t_index) if self.n > 1 else np.zeros(a.dim, dtype=np.int64)
        fprime = self.n * a.power(t, self.n - 1) % a.p if self.n > 1 else np.zeros(a.dim, dtype=np.int64)
        self.fprime = FpMatrix(a.left_matrix(fprime), a.p)

    def gen_weight(self, m: int) -> int:
        i, odd = divmod(m, 2)
        return i * self.n * self.w + odd * self.w

    def differential(self, m: int) -> FpMatrix:
        """d_m : A g_m -> A g_(m-1)."""
        if m <= 0 or m % 2:
            return FpMatrix.zeros(self.A.dim, self.A.dim, self.A.p)
        return self.fprime


def hochschild_small(a: PresentedAlgebra, max_degree: int, weight_max: int | None = None) -> HHResult:
    """HH of k[t]/(t^n) from the 2-periodic bimodule resolution."""
    model = SmallModel(a)
    A, p = model.A, model.A.p
    aw = np.asarray(A.weights, dtype=np.int64)
    if model.n == 1:
        dims = {(0, 0): 1}
        return HHResult(p, max_degree, dims, weight_max, {(0, 0): FpMatrix.identity(1, p)}, model)
    dims: dict[tuple[int, int], int] = {}
    reps: dict[tuple[int, int], FpMatrix] = {}
    for m in range(max_degree + 1):
        shift_m = model.gen_weight(m)
        shift_prev = model.gen_weight(m - 1) if m else 0
        shift_next = model.gen_weight(m + 1)
        d_out, d_in = model.differential(m), model.differential(m + 1)
        for wa in sorted(set(aw.tolist())):
            w = wa + shift_m
            if weight_max is not None and w > weight_max:
                continue
            idx = np.flatnonzero(aw == wa)
            out_rows = np.flatnonzero(aw + shift_prev == w) if m else np.zeros(0, dtype=np.int64)
            in_cols = np.flatnonzero(aw + shift_next == w)
            Dout = FpMatrix(d_out.data[np.ix_(out_rows, idx)], p)
            Din = FpMatrix(d_in.data[np.ix_(idx, in_cols)], p)
            r = _homology_reps(Dout, Din, p)
            if r.cols:
                dims[(m, w)] = dims.get((m, w), 0) + r.cols
                reps[(m, w)] = r
    return HHResult(p, max_degree, dims, weight_max, reps, model)


def connes_B(a: PresentedAlgebra, max_degree: int, budget: int = DEFAULT_BUDGET) -> dict[tuple[int, int], FpMatrix]:
    """Blocks of the normalized Connes operator B: C_n^w -> C_(n+1)^w."""
    bar = BarComplex(a, max_degree, budget)
    return {(n, w): bar.B_block(n, w) for n in range(max_degree + 1) for w in bar.blocks(n)}


def homology_coordinates(hh: HHResult, n: int, w: int, cycle: np.ndarray) -> np.ndarray:
    """Coordinates of a cycle of the bar model in the chosen HH_n^w basis."""
    bar: BarComplex = hh.model
    reps = hh.representatives.get((n, w))
    if reps is None:
        return np.zeros(0, dtype=np.int64)
    im = bar.b_block(n + 1, w)
    sol = solve(hstack([im, reps]), cycle)
    if sol is None:
        raise ValueError(f"vector is not a cycle in degree {n}, weight {w}")
    return sol[im.cols:]


def B_on_homology(hh: HHResult, n: int, w: int) -> FpMatrix:
    """The map HH_n^w -> HH_(n+1)^w induced by B, in representative bases."""
    if not isinstance(hh.model, BarComplex):
        raise TypeError("B on homology needs a bar-model HHResult with representatives")
    bar: BarComplex = hh.model
    src = hh.representatives.get((n, w))
    tgt_dim = hh.dims.get((n + 1, w), 0)
    if src is None:
        return FpMatrix.zeros(tgt_dim, 0, hh.p)
    images = bar.B_block(n, w) @ src
    cols = []
    for j in range(images.cols):
        v = images.column(j)
        if bar.b_block(n + 1, w).rows and not (bar.b_block(n + 1, w) @ FpMatrix(v.reshape(-1, 1), hh.p)).is_zero():
            raise ValueError("B does not send cycles to cycles")
        cols.append(homology_coordinates(hh, n + 1, w, v))
    return FpMatrix.from_columns(cols, tgt_dim, hh.p)


def frobenius_on_HH0(a: PresentedAlgebra) -> FpMatrix:
    """p-power map on HH_0(A) = A (b_1 vanishes for commutative A)."""
    bar = BarComplex(a, 0)
    if any(not bar.b_block(1, w).is_zero() for w in bar.blocks(1)):
        raise ValueError("b_1 is nonzero, so HH_0 is not A")
    return frobenius_on_algebra(bar.A)


def _positive_ideal_weights(a: PresentedAlgebra) -> int:
    w = np.asarray(a.weights[1:], dtype=np.int64)
    if w.size and (w > 0).all():
        return 1
    if w.size and (w < 0).all():
        return -1
    return 0


def bb_bicomplex(bar: BarComplex, variant: str, w: int, deg_lo: int, deg_hi: int, columns: int) -> Bicomplex:
    """Weight-w part of the (b, uB) bicomplex.

    c * u^k with c in C_m sits in cell (k, k - m) of total degree 2k - m;
    dv = b and dh = uB. HC^- keeps k >= 0, HP keeps every k; columns above
    `columns` are cut off (the bicomplex is open to the right).
    """
    k_lo = 0 if variant == "HC-" else (deg_lo - 1) // 2 - 1
    k_hi = columns
    dims, wts, dh, dv = {}, {}, {}, {}
    for k in range(k_lo, k_hi + 1):
        for m in range(0, bar.max_degree + 1):
            n = 2 * k - m
            if n < deg_lo - 2 or n > deg_hi + 2:
                continue
            size = bar.blocks(m).get(w, np.zeros(0)).size
            if size:
                dims[(k, k - m)] = size
                wts[(k, k - m)] = [w] * size
    # the cut only matters if column k_hi + 1 would have cells in range
    cut = any(deg_lo - 2 <= 2 * (k_hi + 1) - m <= deg_hi + 2 and bar.blocks(m).get(w, np.zeros(0)).size
              for m in range(bar.max_degree + 1))
    for (k, j) in dims:
        m = k - j
        if (k, j + 1) in dims:
            dv[(k, j)] = bar.b_block(m, w)
        if (k + 1, j) in dims:
            dh[(k, j)] = bar.B_block(m, w)
    return Bicomplex(bar.p, dims, dh, dv, wts, open_right=cut)


def cyclic_window(a: PresentedAlgebra, variant: str, window: Window, columns: int | None = None,
                  budget: int = DEFAULT_BUDGET) -> GradedSpace:
    """HC^- or HP in the window, weight by weight, with stability flags.

    A degree is INDETERMINATE when cutting one more column off the
    bicomplex changes its dimension in some weight, or when the Hochschild
    chains needed for it were not built.
    """
    if variant not in ("HC-", "HP"):
        raise ValueError(f"unknown cyclic variant {variant!r}")
    sign = _positive_ideal_weights(a)
    A = a if a.is_adapted() else adapted(a)
    wmax = window.weight_max
    wmin = window.weight_min if window.weight_min is not None else (0 if sign >= 0 else -wmax)
    if columns is None:
        span = max(abs(wmax), abs(wmin)) if sign else 2
        columns = max(0, (window.deg_max + 2 + span) // 2 + 1)
    # chains C_m for m up to 2 * columns - deg_min + 2 cover every cell in the window
    m_max = 2 * columns - window.deg_min + 2
    if sign:
        m_max = min(m_max, max(abs(wmax), abs(wmin)) + 1)
    bar = BarComplex(A, m_max, budget)
    cells: dict[GradeIndex, tuple[int, tuple[str, ...]]] = {}
    unknown = set()
    for w in range(wmin, wmax + 1):
        if sign == 0 and w != 0 and not any(w in bar.blocks(m) for m in range(m_max + 1)):
            continue
        bc = bb_bicomplex(bar, variant, w, window.deg_min, window.deg_max, columns)
        _, h = totalize_bicomplex(bc, Window(window.deg_min, window.deg_max, w, w))
        unknown |= set(h.indeterminate_degrees)
        if sign == 0:
            # chains beyond m_max are missing: degrees reached by them are unknown
            for n in window.degrees():
                if 2 * columns - n > bar.max_degree:
                    unknown.add(n)
        for n in window.degrees():
            if n in unknown:
                continue
            d = h.degree_dim(n)
            if d:
                cells[GradeIndex(n, 0, w)] = (d, tuple(f"{variant}{n}w{w}_{i}" for i in range(d)))
    cells = {g: v for g, v in cells.items() if g.deg not in unknown}
    return GradedSpace(cells, window, indeterminate_degrees=frozenset(unknown))

"""Ext^*_A(k, k) from free resolutions, with Yoneda products."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .algebra import AlgebraError, PresentedAlgebra, adapted, as_truncated_poly, local_factor
from .fp import FpMatrix, hstack, kernel_basis, rank, rref, solve


class ResolutionError(ValueError):
    pass


class LiftingError(ResolutionError):
    def __init__(self, degree: int):
        super().__init__(f"cannot lift cocycle to a chain map in homological degree {degree}")
        self.degree = degree


class ResourceError(RuntimeError):
    pass


def _blocks(weights: np.ndarray) -> dict[int, np.ndarray]:
    return {int(w): np.flatnonzero(weights == w) for w in np.unique(weights)}


class FreeResolution:
    """Free resolution P_n -> ... -> P_0 = A -> k of the trivial module.

    Generator j of P_n maps to `boundary(n, j)`, an (rank(n-1), dim A)
    array: row i holds the algebra coefficient of generator i of P_{n-1}.
    """

    algebra: PresentedAlgebra
    length: int

    def rank(self, n: int) -> int:
        raise NotImplementedError

    def gen_weights(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def boundary(self, n: int, j: int) -> np.ndarray:
        raise NotImplementedError

    def eps_coo(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nonzero entries (row j in P_n, col i in P_{n-1}, value) of eps(d_n)."""
        aug = self.algebra.augmentation
        rows, cols, vals = [], [], []
        for j in range(self.rank(n)):
            v = self.boundary(n, j) @ aug % self.algebra.p
            for i in np.flatnonzero(v):
                rows.append(j)
                cols.append(i)
                vals.append(int(v[i]))
        return np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(vals, dtype=np.int64)

    def hom_differential(self, n: int) -> FpMatrix:
        """delta^{n-1}: Hom(P_{n-1}, k) -> Hom(P_n, k), i.e. eps(d_n) transposed."""
        r, c, v = self.eps_coo(n)
        m = np.zeros((self.rank(n), self.rank(n - 1)), dtype=np.int64)
        np.add.at(m, (r, c), v)
        return FpMatrix(m, self.algebra.p)

    def ext_weights(self, n: int) -> np.ndarray:
        # a dual basis vector has the opposite weight of its generator
        return -self.gen_weights(n)

    def expanded(self, n: int) -> FpMatrix:
        """d_n as an F_p matrix from (A-coefficient, generator) coordinates."""
        A = self.algebra
        da = A.dim
        out = np.zeros((self.rank(n - 1) * da, self.rank(n) * da), dtype=np.int64)
        for j in range(self.rank(n)):
            b = self.boundary(n, j)
            for i in range(self.rank(n - 1)):
                if b[i].any():
                    # (x e_a) * g_j -> x e_a b[i] g_i
                    blk = np.einsum("a,xay->yx", b[i], A.mult)
                    out[i * da:(i + 1) * da, j * da:(j + 1) * da] = blk % A.p
        return FpMatrix(out, A.p)

    def expanded_weights(self, n: int) -> np.ndarray:
        w = self.gen_weights(n)
        aw = np.asarray(self.algebra.weights)
        return (w[:, None] + aw[None, :]).reshape(-1)

    def check_exact(self, upto: int | None = None, max_cells: int = 4_000_000):
        """Verify d^2 = 0 and exactness of P_upto -> ... -> P_0 -> k -> 0."""
        upto = self.length if upto is None else min(upto, self.length)
        A = self.algebra
        p = A.p
        prev = None
        for n in range(1, upto + 1):
            if (self.rank(n) * A.dim) * (self.rank(n - 1) * A.dim) > max_cells:
                raise ResourceError(f"exactness check in degree {n} exceeds {max_cells} cells")
            d = self.expanded(n)
            if prev is not None and not (prev @ d).is_zero():
                raise ResolutionError(f"d_{n - 1} d_{n} != 0")
            prev = d
        # homology by weight: H_0 must be k, H_n = 0 for 0 < n < upto
        for n in range(0, upto):
            w_n = self.expanded_weights(n)
            dims = 0
            d_out = self.expanded(n) if n > 0 else FpMatrix(A.augmentation.reshape(1, -1), p)
            d_in = self.expanded(n + 1)
            w_prev = self.expanded_weights(n - 1) if n > 0 else np.zeros(1, dtype=np.int64)
            w_next = self.expanded_weights(n + 1)
            for w, idx in _blocks(w_n).items():
                rows_out = np.flatnonzero(w_prev == w)
                cols_in = np.flatnonzero(w_next == w)
                r_out = rank(FpMatrix(d_out.data[np.ix_(rows_out, idx)], p)) if rows_out.size else 0
                r_in = rank(FpMatrix(d_in.data[np.ix_(idx, cols_in)], p)) if cols_in.size else 0
                dims += idx.size - r_out - r_in
            if dims != 0:
                raise ResolutionError(f"resolution is not exact in degree {n}")
        return True


class PeriodicResolution(FreeResolution):
    """k[s]/(s^n): rank-one terms, d_odd = x s, d_even = x s^(n-1)."""

    def __init__(self, algebra: PresentedAlgebra, length: int):
        info = as_truncated_poly(algebra)
        if info is None:
            raise ResolutionError("algebra is not a truncated polynomial ring in a basis element")
        self.algebra = algebra
        self.length = length
        self.n, self.s_index, self.s_weight = info
        if self.n > 1:
            s = algebra.basis(self.s_index)
            self._odd = s
            self._even = algebra.power(s, self.n - 1)

    def rank(self, n: int) -> int:
        if n < 0 or n > self.length:
            return 0
        return 1 if (n == 0 or self.n > 1) else 0

    def gen_weights(self, n: int) -> np.ndarray:
        if self.rank(n) == 0:
            return np.zeros(0, dtype=np.int64)
        i, odd = divmod(n, 2)
        return np.array([i * self.n * self.s_weight + odd * self.s_weight], dtype=np.int64)

    def boundary(self, n: int, j: int) -> np.ndarray:
        return (self._odd if n % 2 else self._even).reshape(1, -1).copy()


def periodic_resolution(a: PresentedAlgebra, length: int = 10) -> PeriodicResolution:
    return PeriodicResolution(a, length)


class KernelResolution(FreeResolution):
    """Resolution built by repeatedly covering the kernel by free generators.

    Kernel vectors are scanned weight block by weight block (largest absolute
    weight last) in rref order; a vector becomes a new generator when it is
    not in the A-span of the generators chosen so far.
    """

    def __init__(self, algebra: PresentedAlgebra, length: int):
        if not algebra.is_adapted():
            raise ResolutionError("algebra must be in adapted form")
        self.algebra = algebra
        self.length = length
        A = algebra
        self._ranks = [1]
        self._weights = [np.zeros(1, dtype=np.int64)]
        self._bounds: list[np.ndarray | None] = [None]
        prev = FpMatrix(A.augmentation.reshape(1, -1), A.p)
        prev_w = np.zeros(1, dtype=np.int64)
        for n in range(1, length + 1):
            src_w = self.expanded_weights(n - 1)
            gens, gw = [], []
            span = np.zeros((len(src_w), 0), dtype=np.int64)
            order = sorted(_blocks(src_w).items(), key=lambda kv: (abs(kv[0]), kv[0]))
            for w, idx in order:
                rows = np.flatnonzero(prev_w == w)
                sub = FpMatrix(prev.data[np.ix_(rows, idx)], A.p) if rows.size else FpMatrix.zeros(0, idx.size, A.p)
                ker = kernel_basis(sub)
                for c in range(ker.cols):
                    v = np.zeros(len(src_w), dtype=np.int64)
                    v[idx] = ker.column(c)
                    if span.shape[1] and rank(FpMatrix(np.hstack([span, v.reshape(-1, 1)]), A.p)) == rank(FpMatrix(span, A.p)):
                        continue
                    gens.append(v)
                    gw.append(w)
                    span = np.hstack([span, self._module_span(v, n - 1)])
                    span = rref(FpMatrix(span.T, A.p))[0].data
                    span = span[span.any(axis=1)].T
            self._ranks.append(len(gens))
            self._weights.append(np.array(gw, dtype=np.int64))
            self._bounds.append(np.array([g.reshape(self._ranks[n - 1], A.dim) for g in gens], dtype=np.int64))
            prev = self.expanded(n)
            prev_w = src_w

    def _module_span(self, v: np.ndarray, n: int) -> np.ndarray:
        """Columns e_a * v for every basis element e_a of A."""
        A = self.algebra
        x = v.reshape(self._ranks[n], A.dim)
        cols = [(x @ A.left_matrix(A.basis(a)).T % A.p).reshape(-1) for a in range(A.dim)]
        return np.array(cols, dtype=np.int64).T

    def rank(self, n: int) -> int:
        return self._ranks[n] if 0 <= n <= self.length else 0

    def gen_weights(self, n: int) -> np.ndarray:
        return self._weights[n] if 0 <= n <= self.length else np.zeros(0, dtype=np.int64)

    def boundary(self, n: int, j: int) -> np.ndarray:
        return self._bounds[n][j]


class BarResolution(FreeResolution):
    """Normalized bar resolution: generators [a1|...|an] with a_i in a basis of
    the augmentation ideal, d[a1|..|an] = a1[a2|..|an] + sum (-1)^i [..|a_i a_(i+1)|..]."""

    def __init__(self, algebra: PresentedAlgebra, length: int, budget: int = 2_000_000):
        if not algebra.is_adapted():
            algebra = adapted(algebra)
        self.algebra = algebra
        self.length = length
        self.q = algebra.dim - 1
        total = sum(self.q ** n for n in range(length + 2))
        if total > budget:
            raise ResourceError(f"bar resolution through degree {length} needs {total} generators (budget {budget})")
        # structure constants of the augmentation ideal on itself
        self._ideal_mult = algebra.mult[1:, 1:, 1:]
        self._ideal_w = np.asarray(algebra.weights[1:], dtype=np.int64)

    def rank(self, n: int) -> int:
        return self.q ** n if 0 <= n <= self.length + 1 else 0

    def tuples(self, n: int) -> np.ndarray:
        if n == 0:
            return np.zeros((1, 0), dtype=np.int64)
        idx = np.arange(self.q ** n, dtype=np.int64)
        out = np.zeros((idx.size, n), dtype=np.int64)
        for pos in range(n - 1, -1, -1):
            out[:, pos] = idx % self.q
            idx //= self.q
        return out

    def encode(self, t: np.ndarray) -> np.ndarray:
        code = np.zeros(t.shape[0], dtype=np.int64)
        for pos in range(t.shape[1]):
            code = code * self.q + t[:, pos]
        return code

    def gen_weights(self, n: int) -> np.ndarray:
        t = self.tuples(n)
        return self._ideal_w[t].sum(axis=1) if n else np.zeros(1, dtype=np.int64)

    def boundary(self, n: int, j: int) -> np.ndarray:
        A = self.algebra
        t = self.tuples(n)[j]
        out = np.zeros((self.rank(n - 1), A.dim), dtype=np.int64)
        rest = self.encode(t[1:].reshape(1, -1))[0] if n > 1 else 0
        out[rest, 1 + t[0]] += 1
        for i in range(1, n):
            prod = self._ideal_mult[t[i - 1], t[i]]
            for c in np.flatnonzero(prod):
                new = np.concatenate([t[:i - 1], [c], t[i + 1:]])
                out[self.encode(new.reshape(1, -1))[0], 0] += (-1) ** i * prod[c]
        return out % A.p

    def eps_coo(self, n: int):
        if n == 0 or self.q == 0:
            return (np.zeros(0, dtype=np.int64),) * 3
        t = self.tuples(n)
        rows, cols, vals = [], [], []
        src = np.arange(t.shape[0], dtype=np.int64)
        for i in range(1, n):
            for c in range(self.q):
                coef = self._ideal_mult[t[:, i - 1], t[:, i], c]
                nz = np.flatnonzero(coef)
                if nz.size == 0:
                    continue
                new = np.concatenate([t[nz, :i - 1], np.full((nz.size, 1), c), t[nz, i + 1:]], axis=1)
                rows.append(src[nz])
                cols.append(self.encode(new))
                vals.append((-1) ** i * coef[nz])
        if not rows:
            return (np.zeros(0, dtype=np.int64),) * 3
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals) % self.algebra.p


def bar_resolution_oracle(a: PresentedAlgebra, N: int, bound: int = 8, budget: int = 2_000_000) -> BarResolution:
    if N > bound:
        raise ResourceError(f"bar resolution degree {N} exceeds configured bound {bound}")
    return BarResolution(a, N, budget)


def ext_dims(res: FreeResolution, max_deg: int) -> dict[tuple[int, int], int]:
    """dim Ext^n by weight for n <= max_deg, computed blockwise from eps(d)."""
    p = res.algebra.p
    out: dict[tuple[int, int], int] = {}
    coo = {n: res.eps_coo(n) for n in range(1, max_deg + 2)}
    for n in range(0, max_deg + 1):
        w_n = res.ext_weights(n)
        w_prev = res.ext_weights(n - 1) if n > 0 else np.zeros(0, dtype=np.int64)
        w_next = res.ext_weights(n + 1)
        for w, idx in _blocks(w_n).items():
            r_out = _block_rank(coo[n + 1], np.flatnonzero(w_next == w), idx, p)
            r_in = _block_rank(coo[n], idx, np.flatnonzero(w_prev == w), p) if n > 0 else 0
            h = idx.size - r_out - r_in
            if h:
                out[(n, w)] = h
    return out


def _block_rank(coo, rows: np.ndarray, cols: np.ndarray, p: int) -> int:
    if rows.size == 0 or cols.size == 0:
        return 0
    r, c, v = coo
    row_pos = {int(x): i for i, x in enumerate(rows)}
    col_pos = {int(x): i for i, x in enumerate(cols)}
    m = np.zeros((rows.size, cols.size), dtype=np.int64)
    rs = np.isin(r, rows)
    cs = np.isin(c, cols)
    keep = np.flatnonzero(rs & cs)
    if keep.size == 0:
        return 0
    ri = np.array([row_pos[int(x)] for x in r[keep]])
    ci = np.array([col_pos[int(x)] for x in c[keep]])
    np.add.at(m, (ri, ci), v[keep])
    return rank(FpMatrix(m, p))


@dataclass
class ExtGenerator:
    name: str
    degree: int
    weight: int
    kind: str  # exterior, polynomial or truncated
    height: int | None = None  # smallest k with x^k = 0, if seen in window
    vector: np.ndarray | None = None


class ExtRing:
    """Ext_A(k, k) through degree `max_deg` with cocycle representatives."""

    def __init__(self, res: FreeResolution, max_deg: int):
        self.res = res
        self.max_deg = max_deg
        self.p = res.algebra.p
        self.A = res.algebra
        self.basis: dict[int, np.ndarray] = {}  # columns: cocycles in Hom(P_n, k)
        self.basis_weights: dict[int, list[int]] = {}
        self.coboundary: dict[int, FpMatrix] = {}
        for n in range(max_deg + 1):
            dn = res.hom_differential(n + 1)
            dprev = res.hom_differential(n) if n > 0 else FpMatrix.zeros(res.rank(0), 0, self.p)
            ker = kernel_basis(dn)
            aug = hstack([dprev, ker])
            _, piv = rref(aug)
            reps = [j - dprev.cols for j in piv if j >= dprev.cols]
            cols = [ker.column(j) for j in reps]
            weights = res.ext_weights(n)
            self.basis[n] = np.array(cols, dtype=np.int64).T.reshape(res.rank(n), len(cols))
            self.basis_weights[n] = [int(weights[np.flatnonzero(c)[0]]) for c in cols]
            self.coboundary[n] = dprev
        self._lifts: dict[tuple[int, int], list[np.ndarray]] = {}
        self._expanded: dict[int, FpMatrix] = {}

    def dim(self, n: int) -> int:
        return self.basis[n].shape[1]

    def dims(self) -> dict[tuple[int, int], int]:
        out: dict[tuple[int, int], int] = {}
        for n in range(self.max_deg + 1):
            for w in self.basis_weights[n]:
                out[(n, w)] = out.get((n, w), 0) + 1
        return out

    def coordinates(self, n: int, cocycle: np.ndarray) -> np.ndarray:
        """Coordinates of a cocycle's class in the chosen basis of Ext^n."""
        B = self.coboundary[n]
        M = hstack([B, FpMatrix(self.basis[n], self.p)])
        sol = solve(M, cocycle)
        if sol is None:
            raise ResolutionError(f"vector is not a cocycle in degree {n}")
        return sol[B.cols:]

    def _exp(self, n: int) -> FpMatrix:
        if n not in self._expanded:
            self._expanded[n] = self.res.expanded(n)
        return self._expanded[n]

    def _apply(self, Y: np.ndarray, z: np.ndarray) -> np.ndarray:
        # Y: (r_target, r_source, dimA) images of generators; z: (r_source, dimA)
        return np.einsum("ha,ihb,abc->ic", z, Y, self.A.mult) % self.p

    def lift(self, b: int, y: np.ndarray, upto: int) -> list[np.ndarray]:
        """Chain map Y_j : P_(b+j) -> P_j over the cocycle y in Hom(P_b, k)."""
        A, res = self.A, self.res
        Y0 = np.zeros((res.rank(0), res.rank(b), A.dim), dtype=np.int64)
        Y0[0] = np.outer(y, A.unit)
        maps = [Y0 % self.p]
        for j in range(1, upto + 1):
            if b + j > res.length:
                raise LiftingError(b + j)
            d = self._exp(j)
            Yj = np.zeros((res.rank(j), res.rank(b + j), A.dim), dtype=np.int64)
            for g in range(res.rank(b + j)):
                rhs = self._apply(maps[j - 1], res.boundary(b + j, g)).reshape(-1)
                x = solve(d, rhs)
                if x is None:
                    raise LiftingError(j)
                Yj[:, g, :] = x.reshape(res.rank(j), A.dim)
            maps.append(Yj)
        return maps

    def product(self, a: int, x: np.ndarray, b: int, y: np.ndarray) -> np.ndarray:
        """Yoneda product of cocycles x in degree a and y in degree b (as cocycle)."""
        if a + b > self.max_deg:
            raise ValueError(f"product lands in degree {a + b}, beyond the computed window")
        Y = self.lift(b, y, a)[a]
        eps_images = Y @ self.A.augmentation % self.p  # (r_a, r_{a+b})
        return x @ eps_images % self.p

    def mul(self, a: int, i: int, b: int, j: int) -> np.ndarray:
        """Coordinates of basis_i(a) * basis_j(b) in the basis of Ext^(a+b)."""
        key = (b, j)
        lifted = self._lifts.get(key)
        if lifted is None or len(lifted) <= a:
            lifted = self.lift(b, self.basis[b][:, j], self.max_deg - b)
            self._lifts[key] = lifted
        eps_images = lifted[a] @ self.A.augmentation % self.p
        cocycle = self.basis[a][:, i] @ eps_images % self.p
        return self.coordinates(a + b, cocycle)

    def mul_vectors(self, a: int, u: np.ndarray, b: int, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim(a + b), dtype=np.int64)
        for i in np.flatnonzero(u):
            for j in np.flatnonzero(v):
                out = (out + int(u[i]) * int(v[j]) * self.mul(a, i, b, j)) % self.p
        return out

    def power(self, n: int, u: np.ndarray, k: int) -> tuple[int, np.ndarray] | None:
        deg, cur = n, u
        for _ in range(k - 1):
            if deg + n > self.max_deg:
                return None
            cur = self.mul_vectors(deg, cur, n, u)
            deg += n
        return deg, cur

    @cached_property
    def generators(self) -> list[ExtGenerator]:
        gens: list[ExtGenerator] = []
        for n in range(1, self.max_deg + 1):
            dec = []
            for a in range(1, n):
                for i in range(self.dim(a)):
                    for j in range(self.dim(n - a)):
                        dec.append(self.mul(a, i, n - a, j))
            D = FpMatrix(np.array(dec, dtype=np.int64).T.reshape(self.dim(n), len(dec)), self.p)
            r = rank(D)
            for i in range(self.dim(n)):
                e = np.zeros(self.dim(n), dtype=np.int64)
                e[i] = 1
                trial = hstack([D, FpMatrix(e.reshape(-1, 1), self.p)])
                if rank(trial) > r:
                    D, r = trial, r + 1
                    gens.append(self._classify(n, e, len(gens)))
        return gens

    def _classify(self, n: int, e: np.ndarray, idx: int) -> ExtGenerator:
        w = self.basis_weights[n][int(np.flatnonzero(e)[0])]
        height = None
        k = 2
        while n * k <= self.max_deg:
            pw = self.power(n, e, k)
            if not pw[1].any():
                height = k
                break
            k += 1
        if height == 2:
            kind = "exterior"
        elif height is None:
            kind = "polynomial"
        else:
            kind = "truncated"
        return ExtGenerator(f"x{n}_{idx}", n, w, kind, height, e)


def ext_ring(a: PresentedAlgebra, max_deg: int = 10) -> ExtRing:
    """Ext ring through `max_deg`, using the periodic resolution when the
    algebra is a truncated polynomial ring and a kernel resolution otherwise.
    Commutative inputs are first cut down to their local factor at the
    augmentation, which leaves Ext unchanged and keeps resolutions small."""
    if a.is_commutative():
        a = local_factor(a)
    a = a if a.is_adapted() else adapted(a)
    if as_truncated_poly(a) is not None:
        res: FreeResolution = PeriodicResolution(a, 2 * max_deg + 1)
    else:
        res = KernelResolution(a, 2 * max_deg + 1)
    return ExtRing(res, max_deg)

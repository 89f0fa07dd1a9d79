"""Finite-dimensional weighted commutative algebras given by structure constants."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from .fp import FpMatrix, check_prime, kernel_basis, rank, rref, solve


class AlgebraError(ValueError):
    pass


class HopfAxiomError(AlgebraError):
    pass


class NotAUnitError(AlgebraError):
    def __init__(self, label: str):
        super().__init__(f"element {label} is not invertible")
        self.label = label


def _vec(x, n: int, p: int) -> np.ndarray:
    v = np.asarray(x, dtype=np.int64).reshape(-1) % p
    if v.size != n:
        raise AlgebraError(f"vector of length {v.size}, expected {n}")
    return v


@dataclass(frozen=True, eq=False)
class HopfData:
    """comult[k, i, j] is the coefficient of e_i (x) e_j in Delta(e_k);
    antipode[:, j] is S(e_j)."""

    comult: np.ndarray
    counit: np.ndarray
    antipode: np.ndarray


@dataclass(frozen=True, eq=False)
class PresentedAlgebra:
    """mult[i, j, k] is the coefficient of e_k in e_i * e_j."""

    p: int
    labels: tuple[str, ...]
    weights: tuple[int, ...]
    mult: np.ndarray
    unit: np.ndarray
    augmentation: np.ndarray | None = None
    hopf: HopfData | None = None
    name: str = ""

    def __post_init__(self):
        check_prime(self.p)
        n = len(self.labels)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        mult = np.asarray(self.mult, dtype=np.int64) % self.p
        if mult.shape != (n, n, n):
            raise AlgebraError(f"structure constants have shape {mult.shape}, expected {(n, n, n)}")
        mult.flags.writeable = False
        object.__setattr__(self, "mult", mult)
        object.__setattr__(self, "unit", _vec(self.unit, n, self.p))
        if self.augmentation is not None:
            object.__setattr__(self, "augmentation", _vec(self.augmentation, n, self.p))
        if len(self.weights) != n:
            raise AlgebraError("one weight per basis element is required")
        self._check_axioms()
        if self.hopf is not None:
            self._check_hopf()

    @property
    def dim(self) -> int:
        return len(self.labels)

    def basis(self, i: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.int64)
        v[i] = 1
        return v

    def element(self, coeffs: dict[str, int] | Sequence[int]) -> np.ndarray:
        if isinstance(coeffs, dict):
            v = np.zeros(self.dim, dtype=np.int64)
            for lab, c in coeffs.items():
                v[self.labels.index(lab)] += c
            return v % self.p
        return _vec(coeffs, self.dim, self.p)

    def mul(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        return np.einsum("i,j,ijk->k", x, y, self.mult) % self.p

    def left_matrix(self, x) -> np.ndarray:
        """Matrix of y -> x*y: column j is x * e_j."""
        x = np.asarray(x, dtype=np.int64)
        return np.einsum("i,ijk->kj", x, self.mult) % self.p

    def power(self, x, k: int) -> np.ndarray:
        out = self.unit.copy()
        base = np.asarray(x, dtype=np.int64) % self.p
        while k:
            if k & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            k >>= 1
        return out

    def inverse(self, x) -> np.ndarray:
        sol = solve(FpMatrix(self.left_matrix(x), self.p), self.unit)
        if sol is None:
            raise NotAUnitError(self.format(x))
        return sol

    def is_commutative(self) -> bool:
        return bool(np.array_equal(self.mult, self.mult.transpose(1, 0, 2)))

    def epsilon(self, x) -> int:
        if self.augmentation is None:
            raise AlgebraError("algebra has no augmentation")
        return int(np.dot(self.augmentation, np.asarray(x, dtype=np.int64)) % self.p)

    def format(self, x) -> str:
        terms = []
        for i in np.flatnonzero(np.asarray(x) % self.p):
            c = int(x[i]) % self.p
            terms.append(self.labels[i] if c == 1 else f"{c}*{self.labels[i]}")
        return " + ".join(terms) if terms else "0"

    def is_weight_homogeneous(self, x) -> bool:
        ws = {self.weights[i] for i in np.flatnonzero(np.asarray(x) % self.p)}
        return len(ws) <= 1

    def _check_axioms(self):
        p, m = self.p, self.mult
        left = np.einsum("ijl,lkm->ijkm", m, m) % p
        right = np.einsum("jkl,ilm->ijkm", m, m) % p
        if not np.array_equal(left, right):
            i, j, k, _ = np.argwhere(left != right)[0]
            raise AlgebraError(f"multiplication is not associative on ({self.labels[i]}, {self.labels[j]}, {self.labels[k]})")
        eye = np.eye(self.dim, dtype=np.int64)
        if not np.array_equal(self.left_matrix(self.unit), eye):
            raise AlgebraError("unit vector is not a left unit")
        if not np.array_equal(np.einsum("j,ijk->ki", self.unit, m) % p, eye):
            raise AlgebraError("unit vector is not a right unit")
        w = np.asarray(self.weights)
        idx = np.argwhere(m != 0)
        if idx.size:
            bad = w[idx[:, 0]] + w[idx[:, 1]] != w[idx[:, 2]]
            if bad.any():
                i, j, k = idx[np.flatnonzero(bad)[0]]
                raise AlgebraError(f"{self.labels[i]}*{self.labels[j]} has a term {self.labels[k]} of the wrong weight")
        if self.augmentation is not None:
            a = self.augmentation
            lhs = np.einsum("ijk,k->ij", m, a) % p
            if not np.array_equal(lhs, np.outer(a, a) % p) or int(a @ self.unit % p) != 1:
                raise AlgebraError("augmentation is not an algebra map")

    def _check_hopf(self):
        h, p, n = self.hopf, self.p, self.dim
        c = np.asarray(h.comult, dtype=np.int64) % p
        if c.shape != (n, n, n):
            raise HopfAxiomError("comultiplication has the wrong shape")
        # coassociativity: (Delta (x) id) Delta = (id (x) Delta) Delta
        right = np.einsum("kam,mbc->kabc", c, c) % p
        left = np.einsum("klc,lab->kabc", c, c) % p
        if not np.array_equal(left, right):
            raise HopfAxiomError("comultiplication is not coassociative")
        eps = np.asarray(h.counit, dtype=np.int64) % p
        eye = np.eye(n, dtype=np.int64)
        if not np.array_equal(np.einsum("kij,i->kj", c, eps) % p, eye) or not np.array_equal(
            np.einsum("kij,j->ki", c, eps) % p, eye
        ):
            raise HopfAxiomError("counit law fails")
        # Delta(e_i e_j) = Delta(e_i) Delta(e_j)
        m = self.mult
        lhs = np.einsum("ijk,kab->ijab", m, c) % p
        rhs = np.einsum("iac,jbd,abx,cdy->ijxy", c, c, m, m, optimize=True) % p
        if not np.array_equal(lhs, rhs):
            raise HopfAxiomError("comultiplication is not an algebra map")
        if not np.array_equal(np.einsum("ijk,k->ij", m, eps) % p, np.outer(eps, eps) % p):
            raise HopfAxiomError("counit is not an algebra map")
        unit_coprod = np.einsum("k,kij->ij", self.unit, c) % p
        if not np.array_equal(unit_coprod, np.outer(self.unit, self.unit) % p):
            raise HopfAxiomError("Delta(1) != 1 (x) 1")
        s = np.asarray(h.antipode, dtype=np.int64) % p
        # m (S (x) id) Delta = unit * counit
        lhs = np.einsum("kij,ai,ajx->kx", c, s, m) % p
        rhs = np.outer(eps, self.unit) % p
        if not np.array_equal(lhs, rhs):
            raise HopfAxiomError("antipode law fails")

    def aug_ideal_indices(self) -> list[int]:
        if self.augmentation is None:
            raise AlgebraError("algebra has no augmentation")
        return [i for i in range(self.dim) if self.augmentation[i] == 0]

    def is_adapted(self) -> bool:
        """Basis is (1, basis of the augmentation ideal)."""
        if self.augmentation is None:
            return False
        if not np.array_equal(self.unit, self.basis(0)):
            return False
        return self.augmentation[0] == 1 and not self.augmentation[1:].any()


def change_basis(a: PresentedAlgebra, P: np.ndarray, labels: Sequence[str], weights: Sequence[int]) -> PresentedAlgebra:
    """Algebra on new basis f_j = sum_i P[i, j] e_i (P invertible)."""
    p = a.p
    P = np.asarray(P, dtype=np.int64) % p
    Pinv = _inverse(P, p)
    mult = np.einsum("ia,jb,ijk,ck->abc", P, P, a.mult, Pinv, optimize=True) % p
    unit = Pinv @ a.unit % p
    aug = None if a.augmentation is None else a.augmentation @ P % p
    hopf = None
    if a.hopf is not None:
        h = a.hopf
        comult = np.einsum("kc,kij,ai,bj->cab", P, h.comult, Pinv, Pinv, optimize=True) % p
        counit = h.counit @ P % p
        antipode = Pinv @ h.antipode @ P % p
        hopf = HopfData(comult, counit, antipode)
    return PresentedAlgebra(p, tuple(labels), tuple(weights), mult, unit, aug, hopf, a.name)


def _inverse(P: np.ndarray, p: int) -> np.ndarray:
    n = P.shape[0]
    red, piv = rref(FpMatrix(np.hstack([P, np.eye(n, dtype=np.int64)]), p))
    if piv[:n] != list(range(n)):
        raise AlgebraError("basis change is not invertible")
    return red.data[:, n:].copy()


def adapted(a: PresentedAlgebra) -> PresentedAlgebra:
    """Isomorphic algebra whose basis is 1 followed by a weight-homogeneous
    basis of the augmentation ideal."""
    if a.is_adapted():
        return a
    if a.augmentation is None:
        raise AlgebraError("algebra has no augmentation")
    p, n = a.p, a.dim
    cols = [a.unit]
    labels = ["1"]
    weights = [0]
    ker = kernel_basis(FpMatrix(a.augmentation.reshape(1, -1), p))
    # ker columns come from rref order; split each by weight so the basis is homogeneous
    chosen = []
    for j in range(ker.cols):
        v = ker.column(j)
        for w in sorted({a.weights[i] for i in np.flatnonzero(v)}):
            part = np.where(np.asarray(a.weights) == w, v, 0)
            chosen.append((w, part))
    mat = np.zeros((n, 0), dtype=np.int64)
    for w, v in chosen:
        trial = np.hstack([mat, v.reshape(-1, 1)])
        if rank(FpMatrix(trial, p)) > mat.shape[1]:
            mat = trial
            label = a.format(v)
            labels.append(label if " " not in label else f"({label})")
            weights.append(w)
    P = np.hstack([a.unit.reshape(-1, 1), mat])
    if a.weights[int(np.flatnonzero(a.unit)[0])] != 0:
        raise AlgebraError("unit must have weight 0")
    return change_basis(a, P, labels, weights)


def truncated_poly(p: int, n: int, weight_of_t: int = 0, var: str = "t") -> PresentedAlgebra:
    """k[t]/(t^n) on the basis 1, t, ..., t^(n-1) with augmentation t -> 0."""
    if n < 1:
        raise AlgebraError("truncation exponent must be at least 1")
    mult = np.zeros((n, n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n - i):
            mult[i, j, i + j] = 1
    labels = tuple(_power_label(var, i) for i in range(n))
    weights = tuple(i * weight_of_t for i in range(n))
    aug = np.zeros(n, dtype=np.int64)
    aug[0] = 1
    return PresentedAlgebra(p, labels, weights, mult, np.eye(n, dtype=np.int64)[0], aug, name=f"k[{var}]/({var}^{n})")


def _power_label(var: str, i: int) -> str:
    return "1" if i == 0 else var if i == 1 else f"{var}^{i}"


def alpha_p_functions(p: int, weight_of_t: int = 1) -> PresentedAlgebra:
    """O(alpha_p) = k[t]/(t^p) with t primitive."""
    a = truncated_poly(p, p, weight_of_t)
    comult = np.zeros((p, p, p), dtype=np.int64)
    for k in range(p):
        for i in range(k + 1):
            comult[k, i, k - i] = comb(k, i) % p
    antipode = np.diag([(-1) ** k % p for k in range(p)])
    counit = np.eye(p, dtype=np.int64)[0]
    hopf = HopfData(comult, counit, antipode)
    return PresentedAlgebra(p, a.labels, a.weights, a.mult, a.unit, a.augmentation, hopf, f"O(alpha_{p})")


def mu_p_functions(p: int) -> PresentedAlgebra:
    """O(mu_p) = k[x]/(x^p - 1) with x grouplike."""
    mult = np.zeros((p, p, p), dtype=np.int64)
    comult = np.zeros((p, p, p), dtype=np.int64)
    antipode = np.zeros((p, p), dtype=np.int64)
    for i in range(p):
        comult[i, i, i] = 1
        antipode[(-i) % p, i] = 1
        for j in range(p):
            mult[i, j, (i + j) % p] = 1
    labels = tuple(_power_label("x", i) for i in range(p))
    ones = np.ones(p, dtype=np.int64)
    hopf = HopfData(comult, ones, antipode)
    return PresentedAlgebra(p, labels, (0,) * p, mult, np.eye(p, dtype=np.int64)[0], ones, hopf, f"O(mu_{p})")


def tensor(a: PresentedAlgebra, b: PresentedAlgebra) -> PresentedAlgebra:
    if a.p != b.p:
        raise AlgebraError("tensor factors over different primes")
    p = a.p
    na, nb = a.dim, b.dim
    # basis element (i, j) has index i * nb + j
    mult = np.einsum("ikm,jln->ijklmn", a.mult, b.mult).reshape(na * nb, na * nb, na * nb) % p
    labels = tuple(_tensor_label(x, y) for x in a.labels for y in b.labels)
    weights = tuple(wx + wy for wx in a.weights for wy in b.weights)
    unit = np.kron(a.unit, b.unit) % p
    aug = None
    if a.augmentation is not None and b.augmentation is not None:
        aug = np.kron(a.augmentation, b.augmentation) % p
    hopf = None
    if a.hopf is not None and b.hopf is not None:
        ca = a.hopf.comult
        cb = b.hopf.comult
        comult = np.einsum("kxy,lzw->klxzyw", ca, cb).reshape(na * nb, na * nb, na * nb) % p
        counit = np.kron(a.hopf.counit, b.hopf.counit) % p
        antipode = np.kron(a.hopf.antipode, b.hopf.antipode) % p
        hopf = HopfData(comult, counit, antipode)
    return PresentedAlgebra(p, labels, weights, mult, unit, aug, hopf, f"{a.name} (x) {b.name}")


def _tensor_label(x: str, y: str) -> str:
    if x == "1":
        return y
    if y == "1":
        return x
    return f"{x}.{y}"


def cartier_dual(h: PresentedAlgebra) -> PresentedAlgebra:
    """Linear dual Hopf algebra: structure constants transposed, weights negated."""
    if h.hopf is None:
        raise HopfAxiomError("Cartier duality needs Hopf data")
    if not h.is_commutative():
        raise HopfAxiomError("input algebra is not commutative")
    c = np.asarray(h.hopf.comult) % h.p
    if not np.array_equal(c, c.transpose(0, 2, 1)):
        raise HopfAxiomError("input coalgebra is not cocommutative")
    mult = c.transpose(1, 2, 0)  # e^i e^j = sum_k comult[k, i, j] e^k
    comult = h.mult.transpose(2, 0, 1)  # Delta(e^k) = sum mult[i, j, k] e^i (x) e^j
    labels = tuple(_dual_label(l) for l in h.labels)
    weights = tuple(-w for w in h.weights)
    hopf = HopfData(comult, h.unit.copy(), h.hopf.antipode.T.copy())
    return PresentedAlgebra(h.p, labels, weights, mult, h.hopf.counit.copy(), h.unit.copy(), hopf, f"{h.name}^*")


def _dual_label(l: str) -> str:
    if l.endswith("*"):
        return l[:-1]
    return f"{l}*"


def adjoint_coaction_trivial(h: PresentedAlgebra) -> bool:
    """True if f -> f_(2) (x) f_(1) S(f_(3)) equals f (x) 1 for every basis f,
    i.e. the conjugation action of the group scheme on itself is trivial."""
    if h.hopf is None:
        raise HopfAxiomError("needs Hopf data")
    p = h.p
    c = h.hopf.comult
    s = h.hopf.antipode
    three = np.einsum("kal,lbc->kabc", c, c) % p  # (Delta (x) id) Delta
    # second tensor factor: f_(1) * S(f_(3))
    s_third = np.einsum("kabc,xc->kabx", three, s) % p
    second = np.einsum("kabx,axy->kby", s_third, h.mult) % p
    expected = np.einsum("kb,y->kby", np.eye(h.dim, dtype=np.int64), h.unit) % p
    return bool(np.array_equal(second, expected))


def frobenius_on_algebra(a: PresentedAlgebra) -> FpMatrix:
    """Matrix of x -> x^p (F_p-linear since the algebra is commutative)."""
    if not a.is_commutative():
        raise AlgebraError("Frobenius is only additive on commutative algebras")
    cols = [a.power(a.basis(i), a.p) for i in range(a.dim)]
    return FpMatrix.from_columns(cols, a.dim, a.p)


def nilradical(a: PresentedAlgebra) -> FpMatrix:
    """Columns span the nilradical, computed as ker F^k with p^k >= dim."""
    F = frobenius_on_algebra(a)
    k = 1
    while a.p ** k < a.dim:
        k += 1
    Fk = FpMatrix.identity(a.dim, a.p)
    for _ in range(k):
        Fk = F @ Fk
    return kernel_basis(Fk)


def is_semisimple(a: PresentedAlgebra) -> bool:
    return nilradical(a).cols == 0


def _independent_columns(vectors: list[np.ndarray], p: int) -> list[int]:
    keep: list[int] = []
    mat = np.zeros((len(vectors[0]), 0), dtype=np.int64)
    for i, v in enumerate(vectors):
        trial = np.hstack([mat, v.reshape(-1, 1)])
        if rank(FpMatrix(trial, p)) > mat.shape[1]:
            mat = trial
            keep.append(i)
    return keep


def local_factor(a: PresentedAlgebra) -> PresentedAlgebra:
    """The factor eA of a commutative augmented algebra on which the
    augmentation is supported; Ext_A(k, k) = Ext_eA(k, k).

    The complementary factor (1 - e)A is the stable power of the
    augmentation ideal m, and 1 - e is its unit element.
    """
    if a.augmentation is None:
        raise AlgebraError("algebra has no augmentation")
    p, n = a.p, a.dim
    m = kernel_basis(FpMatrix(a.augmentation.reshape(1, -1), p)).data
    power = m
    while power.shape[1]:
        prods = [a.mul(power[:, i], m[:, j]) for i in range(power.shape[1]) for j in range(m.shape[1])]
        nxt = np.array(prods, dtype=np.int64).T if prods else np.zeros((n, 0), dtype=np.int64)
        red = rref(FpMatrix(nxt.T, p))[0].data if nxt.shape[1] else np.zeros((0, n), dtype=np.int64)
        nxt = red[red.any(axis=1)].T
        if nxt.shape[1] == power.shape[1]:
            break
        power = nxt
    if power.shape[1] == 0:
        return a
    # f = sum c_i power_i with f * power_j = power_j for every j
    r = power.shape[1]
    blocks = [np.array([a.mul(power[:, i], power[:, j]) for i in range(r)]).T for j in range(r)]
    f_coef = solve(FpMatrix(np.vstack(blocks), p), np.concatenate([power[:, j] for j in range(r)]))
    if f_coef is None:
        raise AlgebraError("stable power of the augmentation ideal has no unit")
    e = (a.unit - power @ f_coef) % p
    cols = [a.mul(e, a.basis(i)) for i in range(n)]
    keep = _independent_columns(cols, p)
    B = np.array([cols[i] for i in keep], dtype=np.int64).T
    Bm = FpMatrix(B, p)

    def coords(v):
        x = solve(Bm, v)
        if x is None:
            raise AlgebraError("local factor is not closed under multiplication")
        return x

    k = len(keep)
    mult = np.zeros((k, k, k), dtype=np.int64)
    for i in range(k):
        for j in range(k):
            mult[i, j] = coords(a.mul(B[:, i], B[:, j]))
    labels = [a.format(B[:, i]) for i in range(k)]
    labels = [l if " " not in l else f"({l})" for l in labels]
    return PresentedAlgebra(p, labels, [a.weights[i] for i in keep], mult, coords(e),
                            a.augmentation @ B % p, None, a.name)


def as_truncated_poly(a: PresentedAlgebra) -> tuple[int, int, int] | None:
    """(n, index of s, weight of s) if `a` is k[s]/(s^n) with s a basis element
    of the augmentation ideal, else None."""
    if not a.is_adapted():
        return None
    n = a.dim
    if n == 1:
        return 1, -1, 0
    for i in range(1, n):
        s = a.basis(i)
        powers = [a.power(s, k) for k in range(n)]
        if rank(FpMatrix.from_columns(powers, n, a.p)) == n and not a.power(s, n).any():
            return n, i, a.weights[i]
    return None


@dataclass(frozen=True)
class Hypersurface:
    """k[t]/(f) with f = sum coeffs[i] t^i, a k-point t = point, and weight of t."""

    p: int
    coeffs: tuple[int, ...]
    weight_of_t: int = 0
    point: int = 0
    var: str = "t"

    def __post_init__(self):
        coeffs = tuple(int(c) % self.p for c in self.coeffs)
        while coeffs and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        if len(coeffs) < 2:
            raise AlgebraError("relation must have positive degree")
        object.__setattr__(self, "coeffs", coeffs)
        if self.evaluate(coeffs, self.point) != 0:
            raise AlgebraError(f"t = {self.point} is not a root of the relation")
        if self.weight_of_t and len([c for c in coeffs if c]) > 1:
            raise AlgebraError("a weighted relation must be a single monomial")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, coeffs, x) -> int:
        return sum(c * pow(x, i, self.p) for i, c in enumerate(coeffs)) % self.p

    def derivative(self) -> tuple[int, ...]:
        return tuple(i * c % self.p for i, c in enumerate(self.coeffs))[1:]

    def algebra(self) -> PresentedAlgebra:
        n, p = self.degree, self.p
        lead_inv = pow(self.coeffs[-1], -1, p)
        # reduction of t^m for m < 2n - 1 to the basis 1..t^(n-1)
        red = np.zeros((2 * n - 1, n), dtype=np.int64)
        for m in range(2 * n - 1):
            v = np.zeros(2 * n - 1, dtype=np.int64)
            v[m] = 1
            for top in range(2 * n - 2, n - 1, -1):
                c = v[top] % p
                if c:
                    for i, fc in enumerate(self.coeffs):
                        v[top - n + i] = (v[top - n + i] - c * lead_inv * fc) % p
            red[m] = v[:n] % p
        mult = np.zeros((n, n, n), dtype=np.int64)
        for i in range(n):
            for j in range(n):
                mult[i, j] = red[i + j]
        labels = tuple(_power_label(self.var, i) for i in range(n))
        weights = tuple(i * self.weight_of_t for i in range(n))
        aug = np.array([pow(self.point, i, p) for i in range(n)], dtype=np.int64)
        return PresentedAlgebra(p, labels, weights, mult, np.eye(n, dtype=np.int64)[0], aug, name=self.describe())

    def poly_element(self, coeffs: Sequence[int]) -> np.ndarray:
        """Image of a polynomial in the quotient algebra."""
        a = self.algebra()
        t = a.basis(1) if a.dim > 1 else a.unit * 0
        out = np.zeros(a.dim, dtype=np.int64)
        for i, c in enumerate(coeffs):
            if c % self.p:
                out = (out + c * a.power(t, i)) % self.p
        return out

    def describe(self) -> str:
        terms = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if not c:
                continue
            mono = _power_label(self.var, i)
            terms.append(mono if c == 1 and i else f"{c}" if i == 0 else f"{c}{mono}")
        return f"k[{self.var}]/({' + '.join(terms)})"


@dataclass(frozen=True, eq=False)
class TwoTermCotangent:
    """[R*[f] --(x f')--> R*dt] in degrees -1 and 0."""

    algebra: PresentedAlgebra
    connecting: np.ndarray  # the algebra element f'
    source_weight: int
    target_weight: int

    def matrix(self) -> FpMatrix:
        return FpMatrix(self.algebra.left_matrix(self.connecting), self.algebra.p)

    def cohomology_dims(self) -> dict[int, int]:
        r = rank(self.matrix())
        n = self.algebra.dim
        return {-1: n - r, 0: n - r}

    def colie(self) -> FpMatrix:
        """Base change along the augmentation: a 1x1 matrix eps(f')."""
        return FpMatrix([[self.algebra.epsilon(self.connecting)]], self.algebra.p)

    def colie_cohomology(self) -> dict[int, tuple[int, int]]:
        """degree -> (dim, weight) of coLie."""
        r = rank(self.colie())
        return {-1: (1 - r, self.source_weight), 0: (1 - r, self.target_weight)}


def lci_cotangent(pres: Hypersurface) -> TwoTermCotangent:
    a = pres.algebra()
    fprime = pres.poly_element(pres.derivative())
    return TwoTermCotangent(a, fprime, pres.degree * pres.weight_of_t, pres.weight_of_t)


@dataclass(frozen=True, eq=False)
class KaehlerClass:
    """An element of Omega^1 = R dt / (f') R dt via its reduced representative."""

    pres: Hypersurface
    rep: np.ndarray

    def __eq__(self, other):
        return isinstance(other, KaehlerClass) and np.array_equal(self.rep, other.rep)

    def __add__(self, other: "KaehlerClass") -> "KaehlerClass":
        return kaehler_class(self.pres, self.rep + other.rep)

    def is_zero(self) -> bool:
        return not self.rep.any()

    def format(self) -> str:
        a = self.pres.algebra()
        s = a.format(self.rep)
        return "0" if s == "0" else f"({s}) d{self.pres.var}"


def kaehler_class(pres: Hypersurface, coeff: np.ndarray) -> KaehlerClass:
    a = pres.algebra()
    img = a.left_matrix(pres.poly_element(pres.derivative()))
    red, piv = rref(FpMatrix(img.T, pres.p))
    v = np.asarray(coeff, dtype=np.int64).reshape(1, -1) % pres.p
    from .fp import reduce_mod_rows

    return KaehlerClass(pres, reduce_mod_rows(v, red.data, piv, pres.p)[0])


def derivative_of(pres: Hypersurface, u: np.ndarray) -> np.ndarray:
    # u is written in the basis 1, t, ..., t^(n-1), so the formal derivative is exact
    p = pres.p
    n = pres.degree
    out = np.zeros(n, dtype=np.int64)
    for i in range(1, n):
        out[i - 1] = i * int(u[i]) % p
    return out


def kaehler_and_dlog(pres: Hypersurface, u) -> KaehlerClass:
    """dlog(u) = u^{-1} du in Omega^1."""
    a = pres.algebra()
    u = a.element(u)
    inv = a.inverse(u)
    return kaehler_class(pres, a.mul(inv, derivative_of(pres, u)))


def all_units(a: PresentedAlgebra) -> list[np.ndarray]:
    """Every invertible element (for small algebras; enumerates p^dim vectors)."""
    out = []
    for code in range(a.p ** a.dim):
        v = np.array([(code // a.p ** i) % a.p for i in range(a.dim)], dtype=np.int64)
        if rank(FpMatrix(a.left_matrix(v), a.p)) == a.dim:
            out.append(v)
    return out

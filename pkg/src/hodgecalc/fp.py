"""Dense linear algebra over prime fields F_p.

Matrices are immutable numpy int64 arrays reduced mod p.  Elimination uses the
first nonzero entry of each column as pivot, so every result is reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class FieldMismatchError(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def check_prime(p: int) -> int:
    if not is_prime(int(p)):
        raise ValueError(f"modulus {p} is not prime")
    return int(p)


@dataclass(frozen=True)
class FpScalar:
    value: int
    p: int

    def __post_init__(self):
        object.__setattr__(self, "value", int(self.value) % self.p)

    def _other(self, other) -> int:
        if isinstance(other, FpScalar):
            if other.p != self.p:
                raise FieldMismatchError(f"F_{self.p} vs F_{other.p}")
            return other.value
        return int(other)

    def __add__(self, other):
        return FpScalar(self.value + self._other(other), self.p)

    __radd__ = __add__

    def __sub__(self, other):
        return FpScalar(self.value - self._other(other), self.p)

    def __mul__(self, other):
        return FpScalar(self.value * self._other(other), self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FpScalar(-self.value, self.p)

    def inverse(self) -> "FpScalar":
        if self.value == 0:
            raise ZeroDivisionError(f"0 has no inverse in F_{self.p}")
        return FpScalar(pow(self.value, -1, self.p), self.p)

    def __bool__(self):
        return self.value != 0

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.p})"


class FpMatrix:
    """An immutable rows x cols matrix over F_p."""

    __slots__ = ("data", "p")

    def __init__(self, data, p: int):
        arr = np.array(data, dtype=np.int64, copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
        if arr.ndim != 2:
            raise ValueError("FpMatrix needs 2-dimensional data")
        arr %= p
        arr.flags.writeable = False
        self.data = arr
        self.p = int(p)

    @classmethod
    def _wrap(cls, arr: np.ndarray, p: int) -> "FpMatrix":
        # arr must already be reduced mod p and owned by the caller
        m = cls.__new__(cls)
        arr.flags.writeable = False
        m.data = arr
        m.p = p
        return m

    @classmethod
    def zeros(cls, rows: int, cols: int, p: int) -> "FpMatrix":
        return cls._wrap(np.zeros((rows, cols), dtype=np.int64), p)

    @classmethod
    def identity(cls, n: int, p: int) -> "FpMatrix":
        return cls._wrap(np.eye(n, dtype=np.int64), p)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], nrows: int, p: int) -> "FpMatrix":
        if not columns:
            return cls.zeros(nrows, 0, p)
        return cls(np.array(columns, dtype=np.int64).T, p)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def T(self) -> "FpMatrix":
        return FpMatrix._wrap(self.data.T.copy(), self.p)

    def _check(self, other: "FpMatrix"):
        if other.p != self.p:
            raise FieldMismatchError(f"F_{self.p} vs F_{other.p}")

    def __matmul__(self, other: "FpMatrix") -> "FpMatrix":
        self._check(other)
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        return FpMatrix._wrap(matmul_mod(self.data, other.data, self.p), self.p)

    def __add__(self, other: "FpMatrix") -> "FpMatrix":
        self._check(other)
        return FpMatrix._wrap((self.data + other.data) % self.p, self.p)

    def __sub__(self, other: "FpMatrix") -> "FpMatrix":
        self._check(other)
        return FpMatrix._wrap((self.data - other.data) % self.p, self.p)

    def __neg__(self) -> "FpMatrix":
        return FpMatrix._wrap((-self.data) % self.p, self.p)

    def scale(self, c: int) -> "FpMatrix":
        return FpMatrix._wrap((self.data * (int(c) % self.p)) % self.p, self.p)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FpMatrix):
            return NotImplemented
        return self.p == other.p and self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((self.p, self.shape, self.data.tobytes()))

    def is_zero(self) -> bool:
        return not self.data.any()

    def column(self, j: int) -> np.ndarray:
        return self.data[:, j].copy()

    def tolist(self) -> list[list[int]]:
        return self.data.tolist()

    def __repr__(self):
        return f"FpMatrix(p={self.p}, {self.tolist()})"


def matmul_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    # int64 products overflow once inner dimension * (p-1)^2 passes 2^63
    if a.shape[1] == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    if a.shape[1] * (p - 1) ** 2 < 2**62:
        return (a @ b) % p
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    step = max(1, (2**62) // ((p - 1) ** 2))
    for k in range(0, a.shape[1], step):
        out = (out + (a[:, k:k + step] @ b[k:k + step]) % p) % p
    return out


def hstack(blocks: Iterable[FpMatrix], rows: int | None = None, p: int | None = None) -> FpMatrix:
    blocks = list(blocks)
    if not blocks:
        return FpMatrix.zeros(rows or 0, 0, p)
    return FpMatrix._wrap(np.hstack([b.data for b in blocks]), blocks[0].p)


def vstack(blocks: Iterable[FpMatrix], cols: int | None = None, p: int | None = None) -> FpMatrix:
    blocks = list(blocks)
    if not blocks:
        return FpMatrix.zeros(0, cols or 0, p)
    return FpMatrix._wrap(np.vstack([b.data for b in blocks]), blocks[0].p)


def _rref_array(a: np.ndarray, p: int, full: bool = True) -> tuple[np.ndarray, list[int]]:
    a = a.copy()
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        lead = int(a[r, c])
        if lead != 1:
            a[r, c:] = a[r, c:] * pow(lead, -1, p) % p
        if full:
            hit = np.flatnonzero(a[:, c])
            hit = hit[hit != r]
        else:
            hit = r + 1 + np.flatnonzero(a[r + 1:, c])
        if hit.size:
            a[hit, c:] = (a[hit, c:] - np.outer(a[hit, c], a[r, c:])) % p
        pivots.append(c)
        r += 1
    return a, pivots


def rref(m: FpMatrix) -> tuple[FpMatrix, list[int]]:
    """Reduced row-echelon form and pivot columns."""
    a, piv = _rref_array(m.data, m.p)
    return FpMatrix._wrap(a, m.p), piv


def rank(m: FpMatrix) -> int:
    a = m.data
    if a.size == 0:
        return 0
    # elimination cost scales with rank * rows * cols; fewer rows is faster in practice
    if a.shape[0] > a.shape[1]:
        a = a.T
    return len(_rref_array(a, m.p, full=False)[1])


def kernel_basis(m: FpMatrix) -> FpMatrix:
    """Columns form a basis of the right null space {v : m v = 0}."""
    p = m.p
    n = m.cols
    red, piv = _rref_array(m.data, p)
    free = [j for j in range(n) if j not in set(piv)]
    out = np.zeros((n, len(free)), dtype=np.int64)
    for k, f in enumerate(free):
        out[f, k] = 1
        for i, c in enumerate(piv):
            out[c, k] = (-red[i, f]) % p
    return FpMatrix._wrap(out, p)


def left_kernel_basis(m: FpMatrix) -> FpMatrix:
    """Rows form a basis of {v : v m = 0}."""
    return kernel_basis(m.T).T


def row_basis(m: FpMatrix) -> FpMatrix:
    """Nonzero rows of the rref: a canonical basis of the row space."""
    red, piv = _rref_array(m.data, m.p)
    return FpMatrix._wrap(red[:len(piv)].copy(), m.p)


def subquotient_dim(span_a: FpMatrix, span_b: FpMatrix) -> int:
    """dim((A + B) / B) for column spans, computed as rank[A|B] - rank[B]."""
    if span_a.rows != span_b.rows:
        raise ValueError("column spaces live in different ambient dimensions")
    return rank(hstack([span_a, span_b])) - rank(span_b)


def solve(m: FpMatrix, rhs) -> np.ndarray | None:
    """One solution x of m x = rhs (free variables set to 0), or None."""
    p = m.p
    b = np.asarray(rhs, dtype=np.int64).reshape(-1, 1) % p
    if b.shape[0] != m.rows:
        raise ValueError("right-hand side has wrong length")
    aug = np.hstack([m.data, b])
    red, piv = _rref_array(aug, p)
    if piv and piv[-1] == m.cols:
        return None
    x = np.zeros(m.cols, dtype=np.int64)
    for i, c in enumerate(piv):
        x[c] = red[i, -1]
    return x


def solve_many(m: FpMatrix, rhs: FpMatrix) -> FpMatrix | None:
    """Solve m X = rhs column by column; None if any column is inconsistent."""
    p = m.p
    aug = np.hstack([m.data, rhs.data])
    red, piv = _rref_array(aug, p)
    if any(c >= m.cols for c in piv):
        return None
    x = np.zeros((m.cols, rhs.cols), dtype=np.int64)
    for i, c in enumerate(piv):
        x[c] = red[i, m.cols:]
    return FpMatrix._wrap(x, p)


def reduce_mod_rows(vectors: np.ndarray, basis_rref: np.ndarray, pivots: Sequence[int], p: int) -> np.ndarray:
    """Canonical representatives of row vectors modulo an rref row space."""
    v = np.array(vectors, dtype=np.int64, copy=True) % p
    if v.ndim == 1:
        v = v.reshape(1, -1)
    for i, c in enumerate(pivots):
        coef = v[:, c].copy()
        nz = np.flatnonzero(coef)
        if nz.size:
            v[nz] = (v[nz] - np.outer(coef[nz], basis_rref[i])) % p
    return v

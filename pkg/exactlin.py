"""
GROWTHLAB - EXACT LINEAR ALGEBRA
F2 matrices on packed row words, integer Smith normal form, and exact
arithmetic in the real cyclotomic rings Z[2cos(pi/N)].
"""

import logging
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
import sympy

import config
from errors import DomainError, ShapeError

logger = logging.getLogger(__name__)


# ============================================================
# F2 VECTORS AND MATRICES
# ============================================================

def vector_to_mask(vector):
    """Pack a 0/1 sequence into an int, bit j = coordinate j"""
    mask = 0
    for j, value in enumerate(vector):
        if int(value) & 1:
            mask |= 1 << j
    return mask


def mask_to_vector(mask, length):
    """Unpack an int into a 0/1 tuple of the given length"""
    return tuple((mask >> j) & 1 for j in range(length))


@dataclass(frozen=True)
class F2Matrix:
    """Matrix over F2. Each row is one packed word: bit j of bits[i] is entry (i, j)."""
    rows: int
    cols: int
    bits: tuple

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ShapeError(f"negative shape {self.rows}x{self.cols}")
        if len(self.bits) != self.rows:
            raise ShapeError(f"expected {self.rows} row words, got {len(self.bits)}")
        limit = 1 << self.cols
        for word in self.bits:
            if word < 0 or word >= limit:
                raise ShapeError(f"row word {word} does not fit in {self.cols} columns")

    # --- constructors ---

    @classmethod
    def from_rows(cls, rows, cols=None):
        rows = [list(r) for r in rows]
        if cols is None:
            if not rows:
                raise ShapeError("column count required for a matrix without rows")
            cols = len(rows[0])
        for r in rows:
            if len(r) != cols:
                raise ShapeError(f"ragged row of length {len(r)}, expected {cols}")
        return cls(len(rows), cols, tuple(vector_to_mask(r) for r in rows))

    @classmethod
    def from_flat(cls, values, rows, cols):
        """Build from a row-major 0/1 list (the JSON layout)"""
        values = list(values)
        if len(values) != rows * cols:
            raise ShapeError(f"{len(values)} entries cannot fill a {rows}x{cols} matrix")
        return cls(rows, cols, tuple(vector_to_mask(values[i * cols:(i + 1) * cols])
                                     for i in range(rows)))

    @classmethod
    def from_array(cls, array):
        array = np.asarray(array)
        if array.ndim != 2:
            raise ShapeError("expected a 2-d array")
        return cls.from_rows((array % 2).astype(np.uint8).tolist(), cols=array.shape[1])

    @classmethod
    def identity(cls, n):
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def zeros(cls, rows, cols):
        return cls(rows, cols, (0,) * rows)

    @classmethod
    def inclusion(cls, rows, cols):
        """First `cols` coordinates of an F2^rows"""
        if cols > rows:
            raise ShapeError(f"cannot include dimension {cols} into {rows}")
        return cls(rows, cols, tuple((1 << i) if i < cols else 0 for i in range(rows)))

    # --- queries ---

    @property
    def shape(self):
        return (self.rows, self.cols)

    def entry(self, i, j):
        return (self.bits[i] >> j) & 1

    def to_rows(self):
        return [list(mask_to_vector(word, self.cols)) for word in self.bits]

    def to_flat(self):
        return [value for row in self.to_rows() for value in row]

    def to_array(self):
        return np.array(self.to_rows(), dtype=np.uint8).reshape(self.rows, self.cols)

    def is_zero(self):
        return not any(self.bits)

    def transpose(self):
        out = [0] * self.cols
        for i, word in enumerate(self.bits):
            while word:
                low = word & -word
                out[low.bit_length() - 1] |= 1 << i
                word ^= low
        return F2Matrix(self.cols, self.rows, tuple(out))

    # --- arithmetic ---

    def apply(self, vector):
        """Matrix times column vector"""
        if len(vector) != self.cols:
            raise ShapeError(f"vector of length {len(vector)} for {self.rows}x{self.cols} matrix")
        mask = vector_to_mask(vector)
        return tuple((word & mask).bit_count() & 1 for word in self.bits)

    def apply_mask(self, mask):
        out = 0
        for i, word in enumerate(self.bits):
            if (word & mask).bit_count() & 1:
                out |= 1 << i
        return out

    def __matmul__(self, other):
        return f2_mat_mul(self, other)

    def __add__(self, other):
        if self.shape != other.shape:
            raise ShapeError(f"cannot add {self.shape} and {other.shape}")
        return F2Matrix(self.rows, self.cols, tuple(a ^ b for a, b in zip(self.bits, other.bits)))


def f2_mat_mul(a, b):
    """Product a.b over F2"""
    if a.cols != b.rows:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    out = []
    for word in a.bits:
        acc = 0
        while word:
            low = word & -word
            acc ^= b.bits[low.bit_length() - 1]
            word ^= low
        out.append(acc)
    return F2Matrix(a.rows, b.cols, tuple(out))


def _row_reduce(words, ncols):
    """Reduced row echelon form on packed rows, pivot columns in natural order"""
    words = list(words)
    pivots = []
    rank = 0
    for col in range(ncols):
        bit = 1 << col
        pivot = None
        for i in range(rank, len(words)):
            if words[i] & bit:
                pivot = i
                break
        if pivot is None:
            continue
        words[rank], words[pivot] = words[pivot], words[rank]
        for i in range(len(words)):
            if i != rank and words[i] & bit:
                words[i] ^= words[rank]
        pivots.append(col)
        rank += 1
        if rank == len(words):
            break
    return words, pivots


def f2_rank(m):
    """Rank over F2; the input is left untouched"""
    _, pivots = _row_reduce(m.bits, m.cols)
    return len(pivots)


def f2_solve(a, b):
    """Some x with a.x = b, or None when b is outside the image of a"""
    if len(b) != a.rows:
        raise ShapeError(f"right-hand side of length {len(b)} for {a.rows} rows")
    shift = a.cols
    augmented = [word | ((int(b[i]) & 1) << shift) for i, word in enumerate(a.bits)]
    reduced, pivots = _row_reduce(augmented, a.cols)
    for word in reduced[len(pivots):]:
        if (word >> shift) & 1:
            return None
    x = [0] * a.cols
    for r, col in enumerate(pivots):
        x[col] = (reduced[r] >> shift) & 1
    x = tuple(x)
    if a.apply(x) != tuple(int(v) & 1 for v in b):
        raise ArithmeticError("F2 solve failed verification")
    return x


def f2_kernel(m):
    """Basis of the kernel of m as 0/1 tuples, one per free column"""
    reduced, pivots = _row_reduce(m.bits, m.cols)
    pivot_set = set(pivots)
    basis = []
    for free in range(m.cols):
        if free in pivot_set:
            continue
        mask = 1 << free
        for r, col in enumerate(pivots):
            if (reduced[r] >> free) & 1:
                mask |= 1 << col
        basis.append(mask_to_vector(mask, m.cols))
    return basis


# ============================================================
# INTEGER MATRICES AND SMITH NORMAL FORM
# ============================================================

def int_matrix(entries, shape=None):
    """Exact integer matrix: numpy array of Python ints (dtype=object)"""
    if shape is not None:
        out = np.zeros(shape, dtype=object)
        entries = list(entries)
        if entries:
            out[:, :] = np.array(entries, dtype=object).reshape(shape)
        return out
    out = np.array(entries, dtype=object)
    if out.ndim != 2:
        raise ShapeError("integer matrix must be 2-dimensional; pass shape for empty matrices")
    return out


def int_identity(n):
    out = np.zeros((n, n), dtype=object)
    for i in range(n):
        out[i, i] = 1
    return out


def int_det(a):
    """Exact determinant of a square integer matrix"""
    a = np.asarray(a, dtype=object)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"determinant of non-square {a.shape} matrix")
    if a.shape[0] == 0:
        return 1
    return int(sympy.Matrix(a.tolist()).det())


@dataclass(frozen=True, eq=False)
class SnfDecomposition:
    """U.A.V = D with U, V unimodular and D diagonal, d1 | d2 | ..."""
    U: np.ndarray
    D: np.ndarray
    V: np.ndarray

    @property
    def diagonal(self):
        return [int(self.D[i, i]) for i in range(min(self.D.shape))]

    @property
    def rank(self):
        return sum(1 for d in self.diagonal if d != 0)

    @property
    def invariant_factors(self):
        return [d for d in self.diagonal if d > 1]


def _min_abs_pivot(a, s):
    best = None
    where = None
    rows, cols = a.shape
    for i in range(s, rows):
        for j in range(s, cols):
            value = a[i, j]
            if value != 0 and (best is None or abs(value) < best):
                best = abs(value)
                where = (i, j)
    return where


def snf(a):
    """Smith normal form by row/column operations with smallest-|entry| pivots"""
    A = np.array(a, dtype=object)
    if A.ndim != 2:
        raise ShapeError("snf expects a 2-d integer matrix")
    rows, cols = A.shape
    A = A.copy()
    U = int_identity(rows)
    V = int_identity(cols)

    s = 0
    while s < min(rows, cols):
        where = _min_abs_pivot(A, s)
        if where is None:
            break
        i, j = where
        if i != s:
            A[[s, i]] = A[[i, s]]
            U[[s, i]] = U[[i, s]]
        if j != s:
            A[:, [s, j]] = A[:, [j, s]]
            V[:, [s, j]] = V[:, [j, s]]

        pivot = A[s, s]
        clean = True
        for i in range(s + 1, rows):
            if A[i, s] != 0:
                q = A[i, s] // pivot
                A[i] = A[i] - q * A[s]
                U[i] = U[i] - q * U[s]
                if A[i, s] != 0:
                    clean = False
        for j in range(s + 1, cols):
            if A[s, j] != 0:
                q = A[s, j] // pivot
                A[:, j] = A[:, j] - q * A[:, s]
                V[:, j] = V[:, j] - q * V[:, s]
                if A[s, j] != 0:
                    clean = False
        if not clean:
            continue

        # pivot must divide the rest of the block
        offender = None
        for i in range(s + 1, rows):
            for j in range(s + 1, cols):
                if A[i, j] % pivot != 0:
                    offender = i
                    break
            if offender is not None:
                break
        if offender is not None:
            A[s] = A[s] + A[offender]
            U[s] = U[s] + U[offender]
            continue

        if pivot < 0:
            A[s] = -A[s]
            U[s] = -U[s]
        s += 1

    return SnfDecomposition(U=U, D=A, V=V)


# ============================================================
# REAL CYCLOTOMIC RINGS Z[2cos(pi/N)]
# ============================================================

def _poly_add(p, q):
    out = [0] * max(len(p), len(q))
    for i, c in enumerate(p):
        out[i] += c
    for i, c in enumerate(q):
        out[i] += c
    return out


def _poly_scale(p, k):
    return [k * c for c in p]


def _poly_shift(p):
    return [0] + list(p)


def _chebyshev_polys(count):
    """P_0 = 2, P_1 = y, P_{k+1} = y P_k - P_{k-1}, so P_k(x + 1/x) = x^k + x^-k"""
    polys = [[2], [0, 1]]
    while len(polys) <= count:
        polys.append(_poly_add(_poly_shift(polys[-1]), _poly_scale(polys[-2], -1)))
    return polys


def _trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


@dataclass(frozen=True)
class RealCyclotomicRing:
    """Z[y]/(minpoly) with y = 2cos(pi/N); elements are coefficient tuples in 1, y, ..., y^(d-1)"""
    N: int
    minpoly: tuple
    degree: int

    # --- element arithmetic ---

    def reduce(self, coeffs):
        p = list(coeffs)
        d = self.degree
        m = self.minpoly
        for i in range(len(p) - 1, d - 1, -1):
            c = p[i]
            if c:
                base = i - d
                for k in range(d + 1):
                    p[base + k] -= c * m[k]
        p = p[:d]
        if len(p) < d:
            p.extend([0] * (d - len(p)))
        return tuple(p)

    def scalar(self, k):
        return self.reduce([k])

    @property
    def zero(self):
        return (0,) * self.degree

    @property
    def one(self):
        return self.scalar(1)

    def generator(self):
        return self.reduce([0, 1])

    def add(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def sub(self, a, b):
        return tuple(x - y for x, y in zip(a, b))

    def neg(self, a):
        return tuple(-x for x in a)

    def mul(self, a, b):
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return self.reduce(out)

    def chebyshev(self, k):
        """2cos(k pi/N) as a ring element"""
        return self.reduce(_chebyshev_polys(k)[k])

    def two_cos(self, m):
        """Exact 2cos(pi/m); needs m | N apart from the integer cases m = 2, 3"""
        if m == 2:
            return self.zero
        if m == 3:
            return self.one
        if m < 2 or self.N % m != 0:
            raise DomainError(f"2cos(pi/{m}) is not in Z[2cos(pi/{self.N})]")
        return self.chebyshev(self.N // m)

    def mul_matrix(self, c):
        """Integer matrix of x -> c.x in the basis 1, y, ..., y^(d-1)"""
        out = np.zeros((self.degree, self.degree), dtype=np.int64)
        for k in range(self.degree):
            basis = [0] * self.degree
            basis[k] = 1
            out[:, k] = self.mul(c, tuple(basis))
        return out

    # --- numerics ---

    def evaluate(self, element, dps=40):
        with mpmath.workdps(dps):
            y = 2 * mpmath.cos(mpmath.pi / self.N)
            return sum(mpmath.mpf(c) * y ** k for k, c in enumerate(element))

    def residual(self, dps=40):
        """|minpoly(2cos(pi/N))| at high precision"""
        with mpmath.workdps(dps):
            y = 2 * mpmath.cos(mpmath.pi / self.N)
            return abs(sum(mpmath.mpf(c) * y ** k for k, c in enumerate(self.minpoly)))


@lru_cache(maxsize=None)
def real_cyclotomic_ring(n):
    """Ring for 2cos(pi/n), with minpoly read off the palindromic Phi_{2n}"""
    if n < 2:
        raise DomainError(f"order must be at least 2, got {n}")
    x = sympy.Symbol('x')
    phi = sympy.Poly(sympy.cyclotomic_poly(2 * n, x), x)
    coeffs = [int(c) for c in reversed(phi.all_coeffs())]
    half = phi.degree() // 2
    if half > config.MAX_POLY_DEGREE:
        raise DomainError(f"degree {half} of 2cos(pi/{n}) exceeds the cap {config.MAX_POLY_DEGREE}")

    # Phi(x)/x^half = c_half + sum_k c_{half+k} (x^k + x^-k)
    cheb = _chebyshev_polys(half)
    minpoly = [coeffs[half]]
    for k in range(1, half + 1):
        minpoly = _poly_add(minpoly, _poly_scale(cheb[k], coeffs[half + k]))
    minpoly = _trim(minpoly)

    ring = RealCyclotomicRing(N=n, minpoly=tuple(minpoly), degree=len(minpoly) - 1)
    logger.debug("✓ Z[2cos(pi/%d)]: minpoly %s", n, ring.minpoly)
    return ring


# ============================================================
# MATRICES OVER THE RING
# ============================================================

@dataclass(frozen=True)
class RingMatrix:
    """Square matrix with entries in a RealCyclotomicRing, always reduced"""
    ring: RealCyclotomicRing
    entries: tuple

    def __post_init__(self):
        size = len(self.entries)
        for row in self.entries:
            if len(row) != size:
                raise ShapeError("ring matrices must be square")
            for element in row:
                if len(element) != self.ring.degree:
                    raise ShapeError(f"entry {element} is not reduced to degree {self.ring.degree}")

    @property
    def size(self):
        return len(self.entries)

    @classmethod
    def identity(cls, ring, size=3):
        return cls(ring, tuple(tuple(ring.one if i == j else ring.zero for j in range(size))
                               for i in range(size)))

    @classmethod
    def from_array(cls, ring, array):
        """Inverse of to_array"""
        array = np.asarray(array)
        return cls(ring, tuple(tuple(tuple(int(c) for c in array[i, j])
                                     for j in range(array.shape[1]))
                               for i in range(array.shape[0])))

    def key(self):
        """Canonical serialization: all coefficients, row-major"""
        return tuple(c for row in self.entries for element in row for c in element)

    def to_array(self):
        return np.array(self.entries, dtype=np.int64).reshape(self.size, self.size, self.ring.degree)

    def to_float(self):
        return np.array([[float(self.ring.evaluate(e, dps=20)) for e in row] for row in self.entries])

    def power(self, k):
        result = RingMatrix.identity(self.ring, self.size)
        for _ in range(k):
            result = ring_mat_mul(result, self)
        return result

    def __matmul__(self, other):
        return ring_mat_mul(self, other)


def ring_mat_mul(a, b):
    """Exact product over the shared ring"""
    if a.ring != b.ring:
        raise DomainError(f"ring mismatch: N={a.ring.N} vs N={b.ring.N}")
    if a.size != b.size:
        raise ShapeError(f"cannot multiply {a.size}x{a.size} by {b.size}x{b.size}")
    ring = a.ring
    n = a.size
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = ring.zero
            for k in range(n):
                acc = ring.add(acc, ring.mul(a.entries[i][k], b.entries[k][j]))
            row.append(acc)
        rows.append(tuple(row))
    return RingMatrix(ring, tuple(rows))

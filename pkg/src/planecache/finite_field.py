"""Arithmetic over GF(q) for prime q and q = 2**m (m <= 16).

Elements are plain integers in ``range(q)``.  Binary extension fields use the
polynomial bit representation (bit i is the coefficient of x**i) reduced by an
irreducible polynomial; prime fields use modular integers.

Besides the scalar operations there are numpy helpers (``mul_array``,
``add_array``, ...) used by the batched delivery kernels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MAX_BITS = 16
# binary fields up to this size get a full product table
SMALL_FIELD = 256

# x^8 + x^4 + x^3 + x + 1
AES_POLY = 0x11B


class FieldError(ValueError):
    """Raised for invalid field parameters or out-of-range elements."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


def _poly_degree(p: int) -> int:
    return p.bit_length() - 1


def _poly_mod(a: int, m: int) -> int:
    dm = _poly_degree(m)
    while a and _poly_degree(a) >= dm:
        a ^= m << (_poly_degree(a) - dm)
    return a


def is_irreducible(poly: int) -> bool:
    """Exhaustive trial division by every polynomial of degree <= deg/2."""
    deg = _poly_degree(poly)
    if deg < 1:
        return False
    if deg == 1:
        return True
    for cand in range(2, 1 << (deg // 2 + 1)):
        if _poly_mod(poly, cand) == 0:
            return False
    return True


@lru_cache(maxsize=None)
def default_polynomial(m: int) -> int:
    """Smallest irreducible polynomial of degree m, except 0x11B for m = 8."""
    if m == 8:
        return AES_POLY
    for poly in range(1 << m, 1 << (m + 1)):
        if is_irreducible(poly):
            return poly
    raise FieldError(f"no irreducible polynomial of degree {m}")  # pragma: no cover


def clmul_reduce(a: int, b: int, poly: int) -> int:
    """Shift-and-add (peasant) multiplication of bit polynomials modulo ``poly``."""
    m = _poly_degree(poly)
    top = 1 << m
    result = 0
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= poly
    return result


@dataclass(frozen=True)
class FieldSpec:
    """Field size ``q`` and, for binary fields, the reduction polynomial."""

    q: int
    poly: int | None = None
    _tables: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        q = self.q
        if not isinstance(q, (int, np.integer)) or q < 2:
            raise FieldError(f"field size must be an integer >= 2, got {q!r}")
        q = int(q)
        object.__setattr__(self, "q", q)
        binary = q & (q - 1) == 0
        if binary:
            m = q.bit_length() - 1
            if m > MAX_BITS:
                raise FieldError(f"field size 2**{m} exceeds 2**{MAX_BITS}")
            poly = default_polynomial(m) if self.poly is None else int(self.poly)
            if _poly_degree(poly) != m or not is_irreducible(poly):
                raise FieldError(f"polynomial {poly:#x} is not irreducible of degree {m}")
            object.__setattr__(self, "poly", poly)
        else:
            if q > 1 << MAX_BITS:
                raise FieldError(f"field size {q} exceeds 2**{MAX_BITS}")
            if not _is_prime(q):
                raise FieldError(f"field size {q} is neither prime nor a power of two")
            if self.poly is not None:
                raise FieldError("a reduction polynomial only applies to 2**m fields")
        object.__setattr__(self, "_tables", _build_tables(q, self.poly if binary else None))

    @property
    def is_binary(self) -> bool:
        return self.poly is not None

    @property
    def bits(self) -> int:
        return self.q.bit_length() - 1

    @property
    def dtype(self):
        """Element dtype used by the array helpers."""
        return np.uint8 if self.is_binary and self.q <= SMALL_FIELD else np.int64

    def check(self, a) -> int:
        a = int(a)
        if not 0 <= a < self.q:
            raise FieldError(f"element {a} out of range for GF({self.q})")
        return a

    # numpy helpers; operands are assumed already in range
    def add_array(self, a, b):
        if self.is_binary:
            return np.bitwise_xor(a, b)
        return (a + b) % self.q

    def sub_array(self, a, b):
        if self.is_binary:
            return np.bitwise_xor(a, b)
        return (a - b) % self.q

    def mul_array(self, a, b):
        if not self.is_binary:
            return (a.astype(np.int64) * b) % self.q
        log, exp, _, table = self._tables
        a = np.asarray(a)
        b = np.asarray(b)
        if table is not None:
            idx = np.left_shift(a.astype(np.uint16), self.bits) | b.astype(np.uint16)
            return np.take(table, idx)
        prod = exp[log[a] + log[b]]
        return np.where((a == 0) | (b == 0), 0, prod)

    def inv_array(self, a):
        return self._tables[2][np.asarray(a)]


def _primitive_element(q: int, poly: int) -> int:
    order = q - 1
    factors = [p for p in range(2, order + 1) if order % p == 0 and _is_prime(p)]
    for g in range(2, q):
        if all(_pow_binary(g, order // p, poly) != 1 for p in factors):
            return g
    return 1  # q == 2


def _pow_binary(g: int, e: int, poly: int) -> int:
    result = 1
    while e:
        if e & 1:
            result = clmul_reduce(result, g, poly)
        g = clmul_reduce(g, g, poly)
        e >>= 1
    return result


def _build_tables(q: int, poly: int | None):
    """log/exp tables (binary fields) and an inverse table (all fields)."""
    if poly is None:
        inv = np.zeros(q, dtype=np.int64)
        inv[1:] = [pow(a, q - 2, q) for a in range(1, q)]
        return None, None, inv, None
    g = _primitive_element(q, poly)
    exp = np.zeros(2 * q, dtype=np.int64)
    log = np.zeros(q, dtype=np.int64)
    x = 1
    for i in range(q - 1):
        exp[i] = x
        log[x] = i
        x = clmul_reduce(x, g, poly)
    exp[q - 1 : 2 * (q - 1)] = exp[: q - 1]
    inv = np.zeros(q, dtype=np.int64)
    inv[1:] = exp[(q - 1 - log[1:]) % (q - 1)]
    table = None
    if q <= SMALL_FIELD:
        a, b = np.meshgrid(np.arange(q), np.arange(q), indexing="ij")
        table = np.where((a == 0) | (b == 0), 0, exp[log[a] + log[b]]).ravel().astype(np.uint8)
        inv = inv.astype(np.uint8)
    return log, exp, inv, table


def ff_add(a: int, b: int, spec: FieldSpec) -> int:
    a, b = spec.check(a), spec.check(b)
    return a ^ b if spec.is_binary else (a + b) % spec.q


def ff_mul(a: int, b: int, spec: FieldSpec) -> int:
    a, b = spec.check(a), spec.check(b)
    if spec.is_binary:
        return clmul_reduce(a, b, spec.poly)
    return a * b % spec.q


def ff_inv(a: int, spec: FieldSpec) -> int:
    a = spec.check(a)
    if a == 0:
        raise ZeroDivisionError("zero has no multiplicative inverse")
    return int(spec._tables[2][a])


def random_coef_vector(k: int, spec: FieldSpec, rng: np.random.Generator,
                       size: int | None = None) -> np.ndarray:
    """k i.i.d. uniform coefficients from GF(q); ``size`` stacks that many vectors."""
    if k < 1:
        raise FieldError("k must be >= 1")
    shape = k if size is None else (size, k)
    return rng.integers(0, spec.q, size=shape, dtype=np.int64)


def full_rank_probability(k: int, q: int) -> float:
    """P(k uniform random vectors in GF(q)^k are linearly independent)."""
    p = 1.0
    for i in range(1, k + 1):
        p *= 1.0 - float(q) ** (i - 1 - k)
    return p


class EchelonBasis:
    """Incrementally maintained reduced row-echelon basis of a subspace of GF(q)^k.

    Every pivot entry is 1 and is the only nonzero entry of its column among
    the stored rows, so reducing a new vector costs one pass over the rows.
    """

    def __init__(self, k: int, spec: FieldSpec):
        if k < 1:
            raise FieldError("k must be >= 1")
        self.k = k
        self.spec = spec
        self.rows: list[np.ndarray] = []
        self.pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def full(self) -> bool:
        return self.rank == self.k

    def reduce(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.int64)
        if v.shape != (self.k,):
            raise FieldError(f"vector length {v.shape} does not match k={self.k}")
        if np.any((v < 0) | (v >= self.spec.q)):
            raise FieldError("vector entry out of range")
        sp = self.spec
        for row, piv in zip(self.rows, self.pivots):
            c = v[piv]
            if c:
                v = sp.sub_array(v, sp.mul_array(np.full(self.k, c), row))
        return v

    def insert(self, v) -> bool:
        """Add ``v`` if it is independent of the current rows; return whether it was."""
        r = self.reduce(v)
        nz = np.flatnonzero(r)
        if nz.size == 0:
            return False
        sp = self.spec
        piv = int(nz[0])
        r = sp.mul_array(np.full(self.k, sp.inv_array(r[piv])), r)
        for i, row in enumerate(self.rows):
            c = row[piv]
            if c:
                self.rows[i] = sp.sub_array(row, sp.mul_array(np.full(self.k, c), r))
        self.rows.append(r)
        self.pivots.append(piv)
        return True


def basis_insert(basis: EchelonBasis, v) -> tuple[bool, EchelonBasis]:
    accepted = basis.insert(v)
    return accepted, basis


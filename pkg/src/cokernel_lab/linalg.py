"""Exact linear algebra over Z/p^d: Smith normal form and cokernel types.

All elimination happens directly over the residue ring with valuation-based
pivoting, so entries never grow.  The compiled kernel is the Monte Carlo hot
path; everything else here is bookkeeping around it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .errors import NotPrimePower
from .groups import Partition, PGroupType, factorize

SYMMETRIES = ("general", "symmetric", "alternating")

# f * a[s, j] must fit in int64
_MAX_MODULUS = 1 << 31


@dataclass(frozen=True, eq=False)
class ModMatrix:
    """A matrix over Z/m tagged with its symmetry class."""

    entries: np.ndarray
    m: int
    symmetry: str = "general"

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("modulus must be at least 2")
        if self.symmetry not in SYMMETRIES:
            raise ValueError(f"unknown symmetry {self.symmetry!r}")
        a = np.asarray(self.entries, dtype=np.int64) % self.m
        if a.ndim != 2:
            raise ValueError("entries must be a 2-d array")
        if self.symmetry != "general":
            if a.shape[0] != a.shape[1]:
                raise ValueError("structured matrices must be square")
            if self.symmetry == "symmetric" and np.any(a != a.T):
                raise ValueError("matrix is not symmetric")
            if self.symmetry == "alternating" and (np.any((a + a.T) % self.m) or np.any(np.diag(a))):
                raise ValueError("matrix is not alternating")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def reduce(self, m: int) -> "ModMatrix":
        """Reduction modulo a divisor of the current modulus."""
        if self.m % m:
            raise ValueError(f"{m} does not divide {self.m}")
        return ModMatrix(self.entries % m, m, self.symmetry)

    def __eq__(self, other):
        return (
            isinstance(other, ModMatrix)
            and (self.m, self.symmetry) == (other.m, other.symmetry)
            and np.array_equal(self.entries, other.entries)
        )

    def to_json(self) -> dict:
        rows, cols = self.entries.shape
        return {
            "rows": rows,
            "cols": cols,
            "m": self.m,
            "symmetry": self.symmetry,
            "entries": [int(x) for x in self.entries.ravel()],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "ModMatrix":
        rows = int(obj.get("rows", obj.get("n")))
        cols = int(obj.get("cols", rows))
        a = np.array(obj["entries"], dtype=np.int64).reshape(rows, cols)
        return cls(a, int(obj["m"]), obj.get("symmetry", "general"))


@dataclass(frozen=True)
class CokernelClass:
    """Isomorphism type of cok(A) (x) Z/p^d.

    ``capped_lambda`` lists the nonzero elementary-divisor exponents, each at
    most ``d``; ``saturated`` counts those equal to ``d``, which stand for
    cyclic factors of order at least p^d (including free ones).
    """

    p: int
    d: int
    capped_lambda: Partition
    saturated: int

    def __post_init__(self):
        if not isinstance(self.capped_lambda, Partition):
            object.__setattr__(self, "capped_lambda", Partition.of(self.capped_lambda))
        lam = self.capped_lambda.parts
        if lam and lam[0] > self.d:
            raise ValueError("capped_lambda has a part above the level")
        if self.saturated != sum(1 for x in lam if x == self.d):
            raise ValueError("saturated count disagrees with capped_lambda")

    @classmethod
    def from_exponents(cls, exps: Sequence[int], p: int, d: int) -> "CokernelClass":
        lam = Partition.of(int(v) for v in exps if v > 0)
        return cls(p, d, lam, sum(1 for v in exps if v >= d))

    @property
    def corank(self) -> int:
        """Dimension of the kernel mod p, i.e. n - rank over F_p."""
        return len(self.capped_lambda)

    def is_exactly(self, H: PGroupType) -> bool:
        """True when this class certifies cok(A) ~ H over Z_p.

        Needs d > e where p^e is the exponent of H: then no saturated part may
        appear and the unsaturated parts are the exact type.
        """
        if H.p != self.p:
            raise ValueError("prime mismatch")
        if H.lam.parts and H.lam.parts[0] >= self.d:
            raise ValueError(f"level d={self.d} cannot certify {H}")
        return self.saturated == 0 and self.capped_lambda == H.lam

    def is_free_rank_one_plus(self, H: PGroupType) -> bool:
        """Estimator for cok(A) ~ Z_p x H: type of H plus exactly one saturated part."""
        if H.lam.parts and H.lam.parts[0] + 1 >= self.d:
            raise ValueError(f"level d={self.d} cannot certify Z_p x {H}")
        return self.saturated == 1 and self.capped_lambda.parts[1:] == H.lam.parts

    def to_json(self) -> dict:
        return {"p": self.p, "d": self.d, "lambda": list(self.capped_lambda.parts), "saturated": self.saturated}

    @classmethod
    def from_json(cls, obj: Mapping) -> "CokernelClass":
        return cls(int(obj["p"]), int(obj["d"]), Partition.of(obj["lambda"]), int(obj["saturated"]))

    def key(self) -> str:
        """Compact text key, e.g. ``2,1|0``, used for histogram columns."""
        return ",".join(map(str, self.capped_lambda.parts)) + f"|{self.saturated}"


def prime_power(m: int) -> tuple[int, int]:
    """Split m = p^d, raising NotPrimePower otherwise."""
    f = factorize(int(m))
    if len(f) != 1:
        raise NotPrimePower(f"{m} is not a prime power")
    ((p, d),) = f.items()
    return p, d


@njit(cache=True)
def _modinv(u, m):
    a, b = u % m, m
    x0, x1 = 1, 0
    while b:
        q = a // b
        a, b = b, a - q * b
        x0, x1 = x1, x0 - q * x1
    return x0 % m


@njit(cache=True)
def _valuation(x, p, cap):
    v = 0
    while v < cap and x % p == 0:
        x //= p
        v += 1
    return v


@njit(cache=True)
def _find_pivot(a, s, d, p):
    """Entry of minimal valuation in a[s:, s:], first in row-major order."""
    rows, cols = a.shape
    bv = d
    bi = -1
    bj = -1
    for i in range(s, rows):
        for j in range(s, cols):
            if a[i, j] != 0:
                v = _valuation(a[i, j], p, d)
                if v < bv:
                    bv = v
                    bi = i
                    bj = j
                    if v == 0:
                        return bv, bi, bj
    return bv, bi, bj


@njit(cache=True)
def _find_pivot_pow2(a, s, d, mask):
    """``_find_pivot`` for p = 2 on wrapped unsigned storage."""
    rows, cols = a.shape
    bv = d
    bi = -1
    bj = -1
    for i in range(s, rows):
        for j in range(s, cols):
            x = a[i, j] & mask
            if x != 0:
                v = _valuation(x, 2, d)
                if v < bv:
                    bv = v
                    bi = i
                    bj = j
                    if v == 0:
                        return bv, bi, bj
    return bv, bi, bj


@njit(cache=True)
def _move_pivot(a, s, bi, bj):
    rows, cols = a.shape
    if bi != s:
        for j in range(cols):
            t = a[s, j]
            a[s, j] = a[bi, j]
            a[bi, j] = t
    if bj != s:
        for i in range(rows):
            t = a[i, s]
            a[i, s] = a[i, bj]
            a[i, bj] = t


@njit(cache=True)
def _snf_kernel(a, p, d):
    """Elementary divisor exponents of ``a`` over Z/p^d; ``a`` is destroyed.

    Pivot: minimal valuation, first in row-major order.  Only rows below the
    pivot are cleared; column operations are implicit because the pivot
    divides everything left in its row.
    """
    rows, cols = a.shape
    m = 1
    for _ in range(d):
        m *= p
    r = min(rows, cols)
    out = np.full(r, d, np.int64)
    for s in range(r):
        bv, bi, bj = _find_pivot(a, s, d, p)
        if bi < 0:
            break
        _move_pivot(a, s, bi, bj)
        qv = 1
        for _ in range(bv):
            qv *= p
        inv = _modinv(a[s, s] // qv, m)
        piv = a[s, s + 1:].copy()
        for i in range(s + 1, rows):
            x = a[i, s]
            if x != 0:
                f = ((x // qv) * inv) % m
                row = a[i, s + 1:]
                for j in range(row.shape[0]):
                    row[j] = (row[j] - f * piv[j]) % m
                a[i, s] = 0
        out[s] = bv
    return np.sort(out)


@njit(cache=True)
def _snf_kernel_pow2(a, d):
    """Same as ``_snf_kernel`` for p = 2 on unsigned storage.

    Unsigned arithmetic wraps modulo 2^bits, a multiple of 2^d, so rows are
    updated without any reduction and entries are masked only when read.
    Narrow storage lets the row update vectorize.
    """
    rows, cols = a.shape
    m = 1 << d
    mask = m - 1
    r = min(rows, cols)
    out = np.full(r, d, np.int64)
    for s in range(r):
        bv, bi, bj = _find_pivot_pow2(a, s, d, mask)
        if bi < 0:
            break
        _move_pivot(a, s, bi, bj)
        inv = _modinv(np.int64(a[s, s] & mask) >> bv, m)
        piv = a[s, s + 1:].copy()
        for i in range(s + 1, rows):
            x = np.int64(a[i, s] & mask)
            if x != 0:
                f = a.dtype.type(((x >> bv) * inv) & mask)
                row = a[i, s + 1:]
                for j in range(row.shape[0]):
                    row[j] -= f * piv[j]
                a[i, s] = 0
        out[s] = bv
    return np.sort(out)


@njit(cache=True)
def _snf_kernel_float(a, p, d):
    """``_snf_kernel`` on float64 storage for odd p with m^2 < 2^52.

    Every intermediate is an integer below 2^52, so float arithmetic is exact
    and the reduction x - floor(x / m) m vectorizes where integer % does not.
    """
    rows, cols = a.shape
    m = 1
    for _ in range(d):
        m *= p
    fm = float(m)
    inv_m = 1.0 / fm
    r = min(rows, cols)
    out = np.full(r, d, np.int64)
    for s in range(r):
        bv, bi, bj = _find_pivot(a, s, d, p)
        if bi < 0:
            break
        _move_pivot(a, s, bi, bj)
        qv = 1
        for _ in range(bv):
            qv *= p
        inv = _modinv(np.int64(a[s, s]) // qv, m)
        piv = a[s, s + 1:].copy()
        for i in range(s + 1, rows):
            x = np.int64(a[i, s])
            if x != 0:
                f = float(((x // qv) * inv) % m)
                row = a[i, s + 1:]
                for j in range(row.shape[0]):
                    t = row[j] - f * piv[j]
                    t -= np.floor(t * inv_m) * fm
                    if t >= fm:
                        t -= fm
                    elif t < 0:
                        t += fm
                    row[j] = t
                a[i, s] = 0
        out[s] = bv
    return np.sort(out)


_POW2_DTYPES = ((8, np.uint8), (16, np.uint16), (32, np.uint32))
_FLOAT_MODULUS = 1 << 26


def snf_exponents(a: np.ndarray, p: int, d: int) -> np.ndarray:
    """Sorted exponents (length min(rows, cols)) of a rectangular matrix over Z/p^d."""
    m = p**d
    if m > _MAX_MODULUS:
        raise ValueError(f"modulus {m} too large for the int64 kernel")
    a = np.asarray(a)
    if a.size == 0:
        return np.zeros(0, dtype=np.int64)
    if a.dtype == object:
        a = a % m
    a = a.astype(np.int64, copy=False)
    if p == 2:
        # casting wraps modulo 2^bits, which 2^d divides
        for bits, dtype in _POW2_DTYPES:
            if d <= bits:
                return _snf_kernel_pow2(np.ascontiguousarray(a, dtype=dtype), d)
    if m <= _FLOAT_MODULUS:
        return _snf_kernel_float(np.ascontiguousarray(a % m, dtype=np.float64), p, d)
    return _snf_kernel(np.ascontiguousarray(a % m), p, d)


def smith_normal_form(A: ModMatrix) -> tuple[int, ...]:
    """Elementary divisor exponents (ascending, capped at d) of A over Z/p^d."""
    p, d = prime_power(A.m)
    return tuple(int(v) for v in snf_exponents(A.entries, p, d))


def cokernel_class(A: ModMatrix | np.ndarray, p: int, d: int) -> CokernelClass:
    """Type of cok(A) (x) Z/p^d for a square matrix A (integer entries or residues)."""
    entries = A.entries if isinstance(A, ModMatrix) else np.asarray(A)
    if isinstance(A, ModMatrix) and A.m % p**d:
        raise ValueError(f"matrix modulus {A.m} is not divisible by {p}^{d}")
    exps = snf_exponents(entries, p, d)
    return CokernelClass.from_exponents(exps, p, d)


def quotient_class(relations: np.ndarray, generators: int, p: int, d: int) -> CokernelClass:
    """Type of (Z/p^d)^generators modulo the row space of ``relations``."""
    rel = np.asarray(relations, dtype=np.int64).reshape(-1, generators)
    exps = list(snf_exponents(rel, p, d)) if len(rel) else []
    exps += [d] * (generators - len(exps))
    return CokernelClass.from_exponents(exps, p, d)


def rank_mod_p(A: ModMatrix | np.ndarray, p: int) -> int:
    """Rank over F_p (Gaussian elimination is SNF at level 1)."""
    entries = A.entries if isinstance(A, ModMatrix) else np.asarray(A)
    if entries.size == 0:
        return 0
    return int(np.count_nonzero(snf_exponents(entries, p, 1) == 0))


def multi_prime_cokernel(A, primes_with_levels: Mapping[int, int]) -> dict[int, CokernelClass]:
    """Per-prime cokernel classes of an integer matrix.

    Reducing mod p^d for each p is the CRT splitting of cok(A) (x) Z/m with
    m = prod p^d.
    """
    entries = A.entries if isinstance(A, ModMatrix) else A
    entries = np.asarray(entries, dtype=object if np.asarray(entries).dtype == object else np.int64)
    out = {}
    for p, d in sorted(primes_with_levels.items()):
        reduced = entries if entries.dtype == np.int64 else np.asarray(entries % (p**d), dtype=np.int64)
        out[int(p)] = cokernel_class(reduced, int(p), int(d))
    return out

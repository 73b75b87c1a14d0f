"""Finite abelian p-group combinatorics.

A p-group of type ``lambda = (l_1 >= ... >= l_r)`` is ``Z/p^l_1 x ... x Z/p^l_r``.
Everything the limit formulas consume lives here: partitions and their
conjugates, |Aut|, the orders of the exterior and symmetric squares, explicit
subgroup lattices with their Moebius function, and brute-force counts of
symmetric perfect pairings and of symplectic automorphisms.

Elements of a concrete group are tuples of residues ``(x_1 mod p^l_1, ...)``;
internally they are encoded as integers in mixed radix so that subgroup
enumeration can work on numpy index arrays.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit

from .errors import GroupTooLarge, NotASubgroup, NotInSp

#: hard cap on the order of any group whose elements get enumerated
ENUMERATION_GUARD = 4096
#: cap on the number of Gram matrices tried by the pairing counter
PAIRING_WORK_GUARD = 1 << 22
#: cap on (search-tree nodes x |H|) spent by the symplectic counter
SP_WORK_GUARD = 1_000_000_000


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of a positive integer by trial division."""
    out: dict[int, int] = {}
    f = 2
    while f * f <= n:
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        f += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@dataclass(frozen=True)
class Partition:
    """A weakly decreasing tuple of positive integers."""

    parts: tuple[int, ...] = ()

    def __post_init__(self):
        parts = tuple(int(x) for x in self.parts)
        object.__setattr__(self, "parts", parts)
        if any(x < 1 for x in parts):
            raise ValueError(f"partition parts must be positive: {parts}")
        if any(a < b for a, b in zip(parts, parts[1:])):
            raise ValueError(f"partition parts must be weakly decreasing: {parts}")

    @classmethod
    def of(cls, parts: Iterable[int]) -> "Partition":
        """Build a partition from parts in any order."""
        return cls(tuple(sorted((int(x) for x in parts), reverse=True)))

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __getitem__(self, i):
        return self.parts[i]

    @property
    def size(self) -> int:
        return sum(self.parts)

    def conjugate(self) -> "Partition":
        if not self.parts:
            return Partition()
        return Partition(
            tuple(sum(1 for x in self.parts if x >= j) for j in range(1, self.parts[0] + 1))
        )

    def multiplicities(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for x in self.parts:
            out[x] = out.get(x, 0) + 1
        return out

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.parts)) + ")"


def conjugate(lam: Partition | Sequence[int]) -> Partition:
    """Conjugate partition: entry j counts the parts that are >= j."""
    if not isinstance(lam, Partition):
        lam = Partition.of(lam)
    return lam.conjugate()


def partitions(total: int, max_part: int | None = None) -> Iterable[Partition]:
    """All partitions of ``total`` (largest part first, lexicographically decreasing)."""
    if max_part is None:
        max_part = total
    if total == 0:
        yield Partition()
        return
    for first in range(min(total, max_part), 0, -1):
        for rest in partitions(total - first, first):
            yield Partition((first,) + rest.parts)


@dataclass(frozen=True)
class PGroupType:
    """Isomorphism type of a finite abelian p-group."""

    p: int
    lam: Partition = field(default_factory=Partition)

    def __post_init__(self):
        if not isinstance(self.lam, Partition):
            object.__setattr__(self, "lam", Partition.of(self.lam))
        if not is_prime(int(self.p)):
            raise ValueError(f"{self.p} is not prime")
        object.__setattr__(self, "p", int(self.p))

    @property
    def order(self) -> int:
        return self.p ** self.lam.size

    @property
    def exponent(self) -> int:
        return self.p ** self.lam.parts[0] if self.lam.parts else 1

    @property
    def rank(self) -> int:
        return len(self.lam)

    @property
    def moduli(self) -> tuple[int, ...]:
        return tuple(self.p**x for x in self.lam)

    def torsion_order(self, v: int) -> int:
        """|G[p^v]|, the number of elements killed by p^v."""
        return self.p ** sum(min(x, v) for x in self.lam)

    def is_square(self) -> bool:
        """Membership in S_p: G x G for some G, i.e. every multiplicity is even."""
        return all(m % 2 == 0 for m in self.lam.multiplicities().values())

    def half(self) -> "PGroupType":
        if not self.is_square():
            raise NotInSp(f"{self} is not of the form G x G")
        return PGroupType(self.p, Partition(self.lam.parts[::2]))

    def concrete(self) -> "ConcreteGroup":
        return ConcreteGroup(self.p, self.moduli)

    def to_json(self) -> dict:
        return {"p": self.p, "lambda": list(self.lam.parts)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "PGroupType":
        return cls(int(obj["p"]), Partition.of(obj.get("lambda", [])))

    def __str__(self) -> str:
        if not self.lam.parts:
            return "0"
        return " x ".join(f"Z/{m}" for m in self.moduli)


def pgroup(p: int, *parts: int) -> PGroupType:
    """Shorthand: ``pgroup(2, 2, 1)`` is Z/4 x Z/2."""
    return PGroupType(p, Partition.of(parts))


@dataclass(frozen=True)
class AbGroupType:
    """A finite abelian group given by its primary components."""

    components: tuple[tuple[int, Partition], ...] = ()

    def __post_init__(self):
        comps = self.components
        if isinstance(comps, Mapping):
            comps = comps.items()
        norm = []
        for p, lam in comps:
            p = int(p)
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")
            lam = lam if isinstance(lam, Partition) else Partition.of(lam)
            if lam.parts:
                norm.append((p, lam))
        norm.sort()
        if len({p for p, _ in norm}) != len(norm):
            raise ValueError("repeated prime in components")
        object.__setattr__(self, "components", tuple(norm))

    @classmethod
    def from_cyclic_orders(cls, orders: Iterable[int]) -> "AbGroupType":
        """Z/n_1 x Z/n_2 x ... split into primary parts."""
        parts: dict[int, list[int]] = {}
        for n in orders:
            for p, e in factorize(int(n)).items():
                parts.setdefault(p, []).append(e)
        return cls(tuple((p, Partition.of(v)) for p, v in parts.items()))

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.components)

    @property
    def order(self) -> int:
        return math.prod(PGroupType(p, lam).order for p, lam in self.components)

    def component(self, p: int) -> PGroupType:
        for q, lam in self.components:
            if q == p:
                return PGroupType(p, lam)
        return PGroupType(p, Partition())

    def to_json(self) -> dict:
        return {str(p): list(lam.parts) for p, lam in self.components}

    @classmethod
    def from_json(cls, obj: Mapping) -> "AbGroupType":
        return cls(tuple((int(p), Partition.of(v)) for p, v in obj.items()))


class ConcreteGroup:
    """Z/m_1 x ... x Z/m_r with every m_i a power of p, elements enumerated.

    Element codes are mixed-radix integers with the last coordinate varying
    fastest, matching ``itertools.product`` order.
    """

    def __init__(self, p: int, moduli: Sequence[int]):
        self.p = int(p)
        self.moduli = tuple(int(m) for m in moduli)
        self.order = math.prod(self.moduli)
        strides = []
        s = 1
        for m in reversed(self.moduli):
            strides.append(s)
            s *= m
        self._strides = np.array(strides[::-1], dtype=np.int64)
        self._mod = np.array(self.moduli, dtype=np.int64)

    def __eq__(self, other):
        return isinstance(other, ConcreteGroup) and (self.p, self.moduli) == (other.p, other.moduli)

    def __hash__(self):
        return hash((self.p, self.moduli))

    def __repr__(self):
        return f"ConcreteGroup(p={self.p}, moduli={self.moduli})"

    @property
    def rank(self) -> int:
        return len(self.moduli)

    def check_guard(self, guard: int = ENUMERATION_GUARD):
        if self.order > guard:
            raise GroupTooLarge(f"|G| = {self.order} exceeds the enumeration guard {guard}")

    @cached_property
    def coords(self) -> np.ndarray:
        """All elements as an (order, rank) coordinate array, in code order."""
        if not self.moduli:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.indices(self.moduli).reshape(len(self.moduli), -1).T
        return np.ascontiguousarray(grids, dtype=np.int64)

    def encode(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64) % self._mod
        return coords @ self._strides

    def decode(self, codes) -> np.ndarray:
        return self.coords[np.asarray(codes, dtype=np.int64)]

    def element(self, code: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.coords[code])

    def code(self, element: Sequence[int]) -> int:
        return int(self.encode(np.asarray(element, dtype=np.int64)))

    def add(self, a, b) -> np.ndarray:
        return self.encode(self.decode(a) + self.decode(b))

    def scale(self, k: int, codes) -> np.ndarray:
        return self.encode(k * self.decode(codes))

    def all_codes(self) -> np.ndarray:
        return np.arange(self.order, dtype=np.int64)

    def square(self) -> "ConcreteGroup":
        """G x G with coordinates (g, h)."""
        return ConcreteGroup(self.p, self.moduli + self.moduli)

    def torsion_mask(self, v: int) -> np.ndarray:
        """Boolean mask of the elements killed by p^v."""
        return np.all((self.p**v * self.coords) % self._mod == 0, axis=1)

    def generated(self, gens: Iterable[int]) -> frozenset[int]:
        """Subgroup generated by the given element codes."""
        current = np.zeros(1, dtype=np.int64)
        for g in gens:
            current = _extend(self, current, int(g))
        return frozenset(int(x) for x in current)


def _as_concrete(G: PGroupType | ConcreteGroup) -> ConcreteGroup:
    return G.concrete() if isinstance(G, PGroupType) else G


def _extend(G: ConcreteGroup, sub: np.ndarray, g: int) -> np.ndarray:
    """Codes of <sub, g> for a subgroup given by its codes."""
    members = set(int(x) for x in sub)
    multiples = [0]
    x = g
    while x not in members:
        multiples.append(x)
        x = int(G.add(x, g))
    # multiples now lists coset representatives k*g of <sub, g>/sub
    out = G.add(sub[None, :], np.array(multiples, dtype=np.int64)[:, None]).ravel()
    return np.unique(out)


@dataclass(frozen=True)
class SubgroupRecord:
    """A subgroup given by the explicit set of its element codes."""

    ambient: ConcreteGroup
    codes: frozenset[int]

    @property
    def order(self) -> int:
        return len(self.codes)

    @property
    def elements(self) -> frozenset[tuple[int, ...]]:
        return frozenset(self.ambient.element(c) for c in self.codes)

    def code_array(self) -> np.ndarray:
        return np.array(sorted(self.codes), dtype=np.int64)

    def __le__(self, other: "SubgroupRecord") -> bool:
        return self.codes <= other.codes

    def __lt__(self, other: "SubgroupRecord") -> bool:
        return self.codes < other.codes

    def is_closed(self) -> bool:
        arr = self.code_array()
        if 0 not in self.codes:
            return False
        sums = self.ambient.add(arr[:, None], arr[None, :])
        return set(int(x) for x in np.unique(sums)) <= self.codes

    def group_type(self) -> PGroupType:
        """Isomorphism type, read off from the torsion counts |W[p^k]|."""
        G = self.ambient
        p = G.p
        arr = self.code_array()
        coords = G.coords[arr]
        counts = [1]
        k = 1
        while counts[-1] < len(arr):
            counts.append(int(np.all((p**k * coords) % G._mod == 0, axis=1).sum()))
            k += 1
        # lambda'_k = log_p(|W[p^k]| / |W[p^(k-1)]|)
        conj = [round(math.log(counts[i] // counts[i - 1], p)) for i in range(1, len(counts))]
        return PGroupType(p, Partition(tuple(conj)).conjugate())


def enumerate_subgroups(G: PGroupType | ConcreteGroup) -> list[SubgroupRecord]:
    """Every subgroup exactly once, ordered by size then by element codes."""
    return list(_subgroup_lattice(_as_concrete(G)))


@lru_cache(maxsize=64)
def _subgroup_lattice(G: ConcreteGroup) -> tuple[SubgroupRecord, ...]:
    G.check_guard()
    p = G.p
    pmul = G.scale(p, G.all_codes())
    found: dict[frozenset[int], None] = {frozenset([0]): None}
    layer = [np.zeros(1, dtype=np.int64)]
    # every proper inclusion S < T refines through some S' with |S'/S| = p,
    # so growing by elements g with p*g in S reaches all subgroups
    while layer:
        nxt: dict[frozenset[int], np.ndarray] = {}
        for sub in layer:
            inside = np.zeros(G.order, dtype=bool)
            inside[sub] = True
            covered = inside.copy()
            for g in np.nonzero(inside[pmul] & ~inside)[0]:
                if covered[g]:
                    continue
                child = _extend(G, sub, int(g))
                covered[child] = True
                key = frozenset(int(x) for x in child)
                if key not in found and key not in nxt:
                    nxt[key] = child
        for key in nxt:
            found[key] = None
        layer = list(nxt.values())
    subs = sorted(found, key=lambda s: (len(s), sorted(s)))
    return tuple(SubgroupRecord(G, s) for s in subs)


@lru_cache(maxsize=64)
def _moebius_table(G: ConcreteGroup) -> dict[frozenset[int], int]:
    subs = _subgroup_lattice(G)
    mu: dict[frozenset[int], int] = {}
    for K in reversed(subs):
        if len(K.codes) == G.order:
            mu[K.codes] = 1
            continue
        mu[K.codes] = -sum(mu[L.codes] for L in subs if len(L.codes) > len(K.codes) and K.codes < L.codes)
    return mu


def moebius(K: SubgroupRecord, G: PGroupType | ConcreteGroup | None = None) -> int:
    """Moebius function mu(K, G) of the subgroup lattice of G."""
    G = K.ambient if G is None else _as_concrete(G)
    if K.ambient != G or not K.is_closed():
        raise NotASubgroup("K is not a subgroup of G")
    return _moebius_table(G)[K.codes]


def aut_order(G: PGroupType) -> int:
    """|Aut(G)| by the closed form for abelian p-groups.

    With parts sorted ascending ``e_1 <= ... <= e_n``, ``d_k = max{l : e_l = e_k}``
    and ``c_k = min{l : e_l = e_k}``::

        prod_k (p^d_k - p^(k-1)) * prod_j p^(e_j (n - d_j)) * prod_i p^((e_i - 1)(n - c_i + 1))
    """
    p = G.p
    e = sorted(G.lam.parts)
    n = len(e)
    total = 1
    for k in range(1, n + 1):
        ek = e[k - 1]
        d = max(l for l in range(1, n + 1) if e[l - 1] == ek)
        c = min(l for l in range(1, n + 1) if e[l - 1] == ek)
        total *= p**d - p ** (k - 1)
        total *= p ** (ek * (n - d))
        total *= p ** ((ek - 1) * (n - c + 1))
    return total


def ext_square_order(G: PGroupType) -> int:
    """|wedge^2 G| = p^(sum_j l'_j (l'_j - 1) / 2)."""
    return G.p ** sum(c * (c - 1) // 2 for c in G.lam.conjugate())


def sym_square_order(G: PGroupType) -> int:
    """|Sym^2 G| = p^(sum_j l'_j (l'_j + 1) / 2)."""
    return G.p ** sum(c * (c + 1) // 2 for c in G.lam.conjugate())


def _gram_entry_choices(G: PGroupType) -> tuple[int, list[tuple[int, int]], list[list[int]]]:
    """Admissible Gram-matrix entries for pairings G x G -> (1/q)Z/Z, q = exponent.

    Entry (i, j) is a residue mod q divisible by q / p^min(l_i, l_j).
    """
    q = G.exponent
    lam = G.lam.parts
    idx = [(i, j) for i in range(len(lam)) for j in range(i, len(lam))]
    choices = []
    for i, j in idx:
        step = q // G.p ** min(lam[i], lam[j])
        choices.append([k * step for k in range(q // step)])
    return q, idx, choices


def _socle_coords(G: PGroupType) -> np.ndarray:
    """Coordinates of the nonzero elements of order p."""
    p = G.p
    r = G.rank
    cs = np.array(list(itertools.product(range(p), repeat=r))[1:], dtype=np.int64).reshape(-1, r)
    return cs * np.array([p ** (x - 1) for x in G.lam], dtype=np.int64)


@njit(cache=True)
def _count_perfect_gram(choices, lens, rows, cols, socle, q, r):
    """Odometer over symmetric Gram matrices, counting the nondegenerate ones."""
    n_entries = len(lens)
    digits = np.zeros(n_entries, np.int64)
    M = np.zeros((r, r), np.int64)
    for e in range(n_entries):
        M[rows[e], cols[e]] = choices[e, 0]
        M[cols[e], rows[e]] = choices[e, 0]
    count = 0
    while True:
        perfect = True
        for s in range(socle.shape[0]):
            zero = True
            for j in range(r):
                v = 0
                for i in range(r):
                    v += socle[s, i] * M[i, j]
                if v % q != 0:
                    zero = False
                    break
            if zero:
                perfect = False
                break
        if perfect:
            count += 1
        e = 0
        while e < n_entries:
            digits[e] += 1
            if digits[e] < lens[e]:
                break
            digits[e] = 0
            e += 1
        if e == n_entries:
            return count
        for f in range(e + 1):
            v = choices[f, digits[f]]
            M[rows[f], cols[f]] = v
            M[cols[f], rows[f]] = v


def count_symmetric_perfect_pairings(H: PGroupType) -> int:
    """Number of symmetric bilinear perfect pairings H x H -> Q/Z, by brute force.

    Each candidate is a symmetric Gram matrix on the standard generators; it is
    perfect when h -> (h . -) is injective, which it suffices to test on
    elements of order p.
    """
    if H.order > ENUMERATION_GUARD:
        raise GroupTooLarge(f"|H| = {H.order} exceeds the enumeration guard")
    r = H.rank
    if r == 0:
        return 1
    q, idx, choices = _gram_entry_choices(H)
    total = math.prod(len(c) for c in choices)
    if total > PAIRING_WORK_GUARD:
        raise GroupTooLarge(f"{total} candidate Gram matrices for {H}")
    width = max(len(c) for c in choices)
    table = np.zeros((len(choices), width), dtype=np.int64)
    for e, c in enumerate(choices):
        table[e, : len(c)] = c
    lens = np.array([len(c) for c in choices], dtype=np.int64)
    rows = np.array([i for i, _ in idx], dtype=np.int64)
    cols = np.array([j for _, j in idx], dtype=np.int64)
    return int(_count_perfect_gram(table, lens, rows, cols, _socle_coords(H), q, r))


def standard_alternating_form(H: PGroupType) -> np.ndarray:
    """Gram matrix of the hyperbolic form on H = G x G.

    Generators come in adjacent pairs of equal order p^m, paired by
    ``omega(e, f) = p^(l_1 - m) = -omega(f, e)`` with values mod p^l_1.
    """
    if not H.is_square():
        raise NotInSp(f"{H} is not of the form G x G")
    r = H.rank
    q = H.exponent
    omega = np.zeros((r, r), dtype=np.int64)
    for i in range(0, r, 2):
        w = q // H.p ** H.lam[i]
        omega[i, i + 1] = w
        omega[i + 1, i] = (-w) % q
    return omega


def is_perfect_alternating(H: PGroupType, omega: np.ndarray) -> bool:
    omega = np.asarray(omega, dtype=np.int64)
    q = H.exponent
    lam = H.lam.parts
    r = H.rank
    if omega.shape != (r, r):
        return False
    if np.any((omega + omega.T) % q) or np.any(np.diag(omega) % q):
        return False
    for i in range(r):
        for j in range(r):
            if omega[i, j] % (q // H.p ** min(lam[i], lam[j])):
                return False
    if r == 0:
        return True
    images = (_socle_coords(H) @ omega) % q
    return not np.any(np.all(images == 0, axis=1))


def sp_order(H: PGroupType, form: np.ndarray | None = None) -> int:
    """|Sp(H)|: automorphisms of H preserving a perfect alternating pairing.

    Counted by depth-first search over images of the generators: image k must
    be killed by the order of generator k and must pair with the earlier images
    exactly as the generators do.  A map preserving a perfect pairing is
    injective, so no separate bijectivity test is needed.
    """
    if not H.is_square():
        raise NotInSp(f"{H} is not of the form G x G")
    if H.order > ENUMERATION_GUARD:
        raise GroupTooLarge(f"|H| = {H.order} exceeds the enumeration guard")
    r = H.rank
    if r == 0:
        return 1
    omega = standard_alternating_form(H) if form is None else np.asarray(form, dtype=np.int64)
    if not is_perfect_alternating(H, omega):
        raise ValueError("form is not a perfect alternating pairing")
    C = H.concrete()
    X = C.coords
    q = H.exponent
    X_omega = (X @ omega) % q
    allowed = np.array([C.torsion_mask(x) for x in H.lam])
    total = _sp_search(X, X_omega, allowed, omega, q, SP_WORK_GUARD // H.order)
    if total < 0:
        raise GroupTooLarge(f"symplectic search on {H} exceeds its work budget")
    return int(total)


@njit(cache=True)
def _sp_search(X, X_omega, allowed, omega, q, guard):
    """Iterative depth-first count of generator images preserving the form.

    Returns -1 when the node budget is exhausted.
    """
    N, r = X.shape
    cand = np.zeros((r, N), np.int64)
    ncand = np.zeros(r, np.int64)
    pos = np.zeros(r, np.int64)
    chosen = np.zeros(r, np.int64)
    for x in range(N):
        if allowed[0, x]:
            cand[0, ncand[0]] = x
            ncand[0] += 1
    total = 0
    nodes = 0
    k = 0
    while True:
        if pos[k] >= ncand[k]:
            if k == 0:
                return total
            k -= 1
            continue
        chosen[k] = cand[k, pos[k]]
        pos[k] += 1
        nodes += 1
        if nodes > guard:
            return -1
        # candidates for generator k + 1 given the images chosen so far
        nxt = k + 1
        ncand[nxt] = 0
        for x in range(N):
            if not allowed[nxt, x]:
                continue
            ok = True
            for j in range(nxt):
                v = 0
                for i in range(r):
                    v += X_omega[x, i] * X[chosen[j], i]
                if v % q != omega[nxt, j]:
                    ok = False
                    break
            if ok:
                cand[nxt, ncand[nxt]] = x
                ncand[nxt] += 1
        if nxt == r - 1:
            total += ncand[nxt]
        else:
            pos[nxt] = 0
            k = nxt

"""Brute-force ground truth at enumerable sizes.

Two independent routes to the Hom-moment E #Hom(cok(A), G):

* ``exact_hom_moment`` enumerates every matrix (or graph) with its exact
  rational probability and reads #Hom off the cokernel type;
* ``fourier_hom_moment`` evaluates the character-sum expansion

      (1/|G|^n) sum_{(g_k, h_k) in (G^2)^n} prod_k E zeta^(U(g_k,h_k) x_kk)
                                            prod_{(k,l)} E zeta^(B(..) x_kl)

  with the quadratic form U and bilinear form B of a ``PairingSpec``.

Also here: exhaustive automorphism and tensor-square counts, the trivial-part
census, isotropic subgroups of G x G, the sine-sum identity and the zero-column
bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np
from numba import njit, types
from numba.typed import Dict

from .errors import ConstantMap, GroupTooLarge, ImaginaryResidue, LevelTooLow, TooLargeToEnumerate
from .groups import (
    ENUMERATION_GUARD,
    ConcreteGroup,
    Partition,
    PGroupType,
    SubgroupRecord,
    enumerate_subgroups,
    ext_square_order,
    moebius,
    sym_square_order,
)
from .linalg import CokernelClass, cokernel_class, quotient_class
from .models import EntryDistribution, GraphModel, MatrixModel

ENUMERATION_LIMIT = 10**7
IMAGINARY_TOL = 1e-9

FLAVORS = ("U1B1", "U2B2", "U3B3", "U4B4")
_FLAVOR_OF_KIND = {"general": "U1B1", "symmetric": "U2B2", "alternating": "U3B3", "graph": "U4B4"}


# ---------------------------------------------------------------- Hom and Sur


def hom_count_from_class(c: CokernelClass, G: PGroupType) -> int:
    """#Hom(X, G) for X of type ``c``; saturated parts count as full copies of G.

    Exact whenever exp(G) <= p^d, because then Hom(Z/p^v, G) = G for v >= d.
    """
    if c.p != G.p:
        raise ValueError("prime mismatch")
    if G.exponent > c.p**c.d:
        raise LevelTooLow(f"level d={c.d} cannot resolve Hom into {G}")
    out = 1
    for v in c.capped_lambda:
        out *= G.torsion_order(v)
    return out


def sur_count(c: CokernelClass, G: PGroupType) -> int:
    """#Sur(X, G) = sum_{K <= G} mu(K, G) #Hom(X, K)."""
    total = 0
    for K in enumerate_subgroups(G):
        mu = moebius(K)
        if mu:
            total += mu * hom_count_from_class(c, K.group_type())
    return total


def _group_class(X: PGroupType, d: int) -> CokernelClass:
    return CokernelClass.from_exponents(X.lam.parts, X.p, d)


def hom_count_brute(X: PGroupType, G: PGroupType) -> int:
    """Count generator images y_i in G with p^(l_i) y_i = 0, one by one."""
    C = G.concrete()
    count = 1
    for part in X.lam:
        count *= int(C.torsion_mask(part).sum())
    return count


def sur_count_brute(X: PGroupType, G: PGroupType) -> int:
    """Count homomorphisms X -> G whose images generate G, by listing all of them."""
    C = G.concrete()
    C.check_guard()
    choices = [np.nonzero(C.torsion_mask(part))[0] for part in X.lam]
    if math.prod(len(c) for c in choices) > ENUMERATION_LIMIT:
        raise TooLargeToEnumerate("too many homomorphisms to list")
    return sum(1 for ys in itertools.product(*choices) if len(C.generated(ys)) == C.order)


# ---------------------------------------------------------------- automorphisms


_BITSET = types.UniTuple(types.uint64, 4)


@njit(cache=True)
def _aut_dp(add, scale_p, levels):
    """Count generator images (largest order first) that generate the group.

    States are the subgroups S generated so far, stored as 4-word bitsets.  The
    image y of a generator of order p^e must satisfy p^e y = 0 and have order
    exactly p^e modulo S; every such y inside the child <S, y> produces the
    same child, so children are weighted by how many valid y they contain.
    """
    N = add.shape[0]
    cur = Dict.empty(key_type=_BITSET, value_type=types.int64)
    zero_key = (np.uint64(1), np.uint64(0), np.uint64(0), np.uint64(0))
    cur[zero_key] = 1
    members = np.zeros(N, np.int64)
    in_s = np.zeros(N, np.bool_)
    covered = np.zeros(N, np.bool_)
    in_t = np.zeros(N, np.bool_)
    for e in levels:
        nxt = Dict.empty(key_type=_BITSET, value_type=types.int64)
        # killed[y]: p^e y = 0;  top[y] = p^(e-1) y
        killed = np.zeros(N, np.bool_)
        top = np.zeros(N, np.int64)
        for y in range(N):
            x = y
            for _ in range(e - 1):
                x = scale_p[x]
            top[y] = x
            killed[y] = scale_p[x] == 0
        for key, count in cur.items():
            size = 0
            for y in range(N):
                bit = (key[y >> 6] >> np.uint64(y & 63)) & np.uint64(1)
                in_s[y] = bit == 1
                if in_s[y]:
                    members[size] = y
                    size += 1
            covered[:] = False
            for y in range(N):
                if covered[y] or not killed[y] or in_s[top[y]]:
                    continue
                # T = S + <y>
                in_t[:] = False
                words = np.zeros(4, np.uint64)
                g = 0
                while True:
                    for i in range(size):
                        z = add[members[i], g]
                        if not in_t[z]:
                            in_t[z] = True
                            words[z >> 6] |= np.uint64(1) << np.uint64(z & 63)
                    g = add[g, y]
                    if in_s[g]:
                        break
                mult = 0
                for z in range(N):
                    if in_t[z] and killed[z] and not in_s[top[z]]:
                        covered[z] = True
                        mult += 1
                tkey = (words[0], words[1], words[2], words[3])
                if tkey in nxt:
                    nxt[tkey] += count * mult
                else:
                    nxt[tkey] = count * mult
        cur = nxt
    total = 0
    for key, count in cur.items():
        total += count
    return total


def count_automorphisms(G: PGroupType) -> int:
    """|Aut(G)| as the number of generator images that generate G (|G| <= 256)."""
    if G.order > 256:
        raise GroupTooLarge("automorphism enumeration is limited to |G| <= 256")
    if G.rank == 0:
        return 1
    C = G.concrete()
    codes = C.all_codes()
    add = C.add(codes[:, None], codes[None, :])
    scale_p = C.scale(G.p, codes)
    levels = np.array(G.lam.parts, dtype=np.int64)
    return int(_aut_dp(add, scale_p, levels))


def count_automorphisms_naive(G: PGroupType) -> int:
    """Same count by listing every homomorphism; only for tiny groups."""
    return sur_count_brute(G, G)


# ---------------------------------------------------------------- tensor squares


def tensor_square_orders(G: PGroupType) -> dict[str, int]:
    """|G (x) G|, |wedge^2 G| and |Sym^2 G| from explicit presentations.

    Generators e_i (x) e_j with relations p^min(l_i, l_j) (e_i (x) e_j); the
    exterior square adds g (x) g for every g in G, the symmetric square adds
    e_i (x) e_j - e_j (x) e_i.  Orders are read off the Smith form at a level
    above the exponent, so nothing saturates.
    """
    p = G.p
    r = G.rank
    if r == 0:
        return {"tensor": 1, "ext": 1, "sym": 1}
    lam = G.lam.parts
    d = lam[0] + 1
    gens = r * r

    def idx(i, j):
        return i * r + j

    base = []
    for i in range(r):
        for j in range(r):
            row = np.zeros(gens, dtype=np.int64)
            row[idx(i, j)] = p ** min(lam[i], lam[j])
            base.append(row)
    ext = list(base)
    C = G.concrete()
    C.check_guard()
    for x in C.coords:
        ext.append(np.outer(x, x).ravel())
    sym = list(base)
    for i in range(r):
        for j in range(i + 1, r):
            row = np.zeros(gens, dtype=np.int64)
            row[idx(i, j)] = 1
            row[idx(j, i)] = -1
            sym.append(row)

    def order(rels):
        cls = quotient_class(np.array(rels), gens, p, d)
        if cls.saturated:
            raise AssertionError("presentation level too low")
        return p ** cls.capped_lambda.size

    return {"tensor": order(base), "ext": order(ext), "sym": order(sym)}


# ---------------------------------------------------------------- pairings


def standard_pairing(G: PGroupType, d: int | None = None) -> np.ndarray:
    """Weights w_i with x . y = sum_i w_i x_i y_i mod p^d."""
    if d is None:
        d = G.lam.parts[0] if G.rank else 1
    if G.rank and G.lam.parts[0] > d:
        raise LevelTooLow(f"p^{d} does not kill {G}")
    return np.array([G.p ** (d - x) for x in G.lam], dtype=np.int64)


@dataclass(frozen=True)
class PairingSpec:
    """The quadratic form U and bilinear form B on G^2 for one matrix flavor.

    Elements of G^2 are pairs (g, h); values are residues mod p^d.
    ``pairs(n)`` lists the index pairs carrying an independent entry.
    """

    flavor: str
    G: PGroupType
    d: int

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if self.G.rank and self.G.lam.parts[0] > self.d:
            raise LevelTooLow(f"p^{self.d} does not kill {self.G}")

    @classmethod
    def for_kind(cls, kind: str, G: PGroupType, d: int) -> "PairingSpec":
        return cls(_FLAVOR_OF_KIND[kind], G, d)

    @property
    def modulus(self) -> int:
        return self.G.p**self.d

    @property
    def weights(self) -> np.ndarray:
        return standard_pairing(self.G, self.d)

    def dot(self, x, y) -> np.ndarray:
        return (np.asarray(x) * np.asarray(y) * self.weights).sum(axis=-1) % self.modulus

    def U(self, g, h) -> np.ndarray:
        if self.flavor in ("U1B1", "U2B2"):
            return self.dot(g, h)
        return np.zeros(np.broadcast_shapes(np.shape(g), np.shape(h))[:-1], dtype=np.int64)

    def B(self, gk, hk, gl, hl) -> np.ndarray:
        m = self.modulus
        if self.flavor == "U1B1":
            return self.dot(gk, hl)
        if self.flavor == "U2B2":
            return (self.dot(gk, hl) + self.dot(gl, hk)) % m
        if self.flavor == "U3B3":
            return (self.dot(gk, hl) - self.dot(gl, hk)) % m
        return (-self.dot(np.asarray(gk) - gl, np.asarray(hk) - hl)) % m

    def pairs(self, n: int) -> list[tuple[int, int]]:
        if self.flavor == "U1B1":
            return [(k, l) for k in range(n) for l in range(n) if k != l]
        return [(k, l) for k in range(n) for l in range(k + 1, n)]

    @property
    def extra_factor(self) -> Fraction:
        """The graph flavor counts Hom from Z x S, so one factor |G| is removed."""
        return Fraction(1, self.G.order) if self.flavor == "U4B4" else Fraction(1)


def _entry_law(model, d: int, p: int) -> Callable[[int, int], EntryDistribution]:
    """Law of entry (k, l) reduced to Z/p^d."""
    m = p**d
    if isinstance(model, GraphModel):
        beta = model.beta_fraction
        D = EntryDistribution(m, ((0, 1 - beta), (1, beta)))
        return lambda k, l: D
    if model.m % m:
        raise ValueError(f"entry modulus {model.m} is not divisible by {m}")
    cache: dict[int, EntryDistribution] = {}

    def law(k, l):
        D = model.entry_distribution(k, l)
        if id(D) not in cache:
            cache[id(D)] = D.reduced(m)
        return cache[id(D)]

    return law


def _char(D: EntryDistribution, t: np.ndarray) -> np.ndarray:
    """E zeta^(t x) for x ~ D, zeta = exp(2 pi i / m), vectorized over t."""
    out = np.zeros(np.shape(t), dtype=complex)
    for r, q in D.support:
        out += float(q) * np.exp(2j * np.pi * ((np.asarray(t) * r) % D.m) / D.m)
    return out


def _tuples(G: PGroupType, n: int) -> tuple[np.ndarray, np.ndarray]:
    """All (g_1..g_n, h_1..h_n) as coordinate arrays of shape (T, n, rank)."""
    C = G.concrete()
    N = C.order
    if N ** (2 * n) > ENUMERATION_LIMIT:
        raise TooLargeToEnumerate(f"|G|^(2n) = {N ** (2 * n)} tuples")
    idx = np.indices((N,) * (2 * n)).reshape(2 * n, -1).T
    coords = C.coords[idx]
    return coords[:, :n], coords[:, n:]


def _model_flavor(model) -> str:
    return "U4B4" if isinstance(model, GraphModel) else _FLAVOR_OF_KIND[model.kind]


def fourier_hom_moment(model: MatrixModel | GraphModel, G: PGroupType, d: int) -> float:
    """E #Hom(cok, G) by the character-sum expansion, in floating point."""
    spec = PairingSpec(_model_flavor(model), G, d)
    n = model.n
    if G.order == 1:
        return 1.0
    law = _entry_law(model, d, G.p)
    g, h = _tuples(G, n)
    terms = np.ones(len(g), dtype=complex)
    if spec.flavor in ("U1B1", "U2B2"):
        for k in range(n):
            terms *= _char(law(k, k), spec.U(g[:, k], h[:, k]))
    for k, l in spec.pairs(n):
        B = spec.B(g[:, k], h[:, k], g[:, l], h[:, l])
        # the graph flavor carries the edge indicator of {k, l}
        terms *= _char(law(k, l), B)
    value = terms.sum() / G.order**n * float(spec.extra_factor)
    if abs(value.imag) > IMAGINARY_TOL:
        raise ImaginaryResidue(f"imaginary part {value.imag:.3e}")
    return float(value.real)


def _matrix_assignments(model: MatrixModel, d: int, p: int):
    """Yield (matrix mod p^d, exact probability) over all matrices in the support."""
    law = _entry_law(model, d, p)
    rows, cols = model.free_positions()
    laws = [law(int(i), int(j)) for i, j in zip(rows, cols)]
    if math.prod(len(D.support) for D in laws) > ENUMERATION_LIMIT:
        raise TooLargeToEnumerate("support too large to enumerate")
    m = p**d
    n = model.n
    for combo in itertools.product(*(D.support for D in laws)):
        a = np.zeros((n, n), dtype=np.int64)
        prob = Fraction(1)
        for (r, q), i, j in zip(combo, rows, cols):
            a[i, j] = r
            if model.kind == "symmetric":
                a[j, i] = r
            elif model.kind == "alternating":
                a[j, i] = (-r) % m
            prob *= q
        yield a, prob


def _graph_assignments(model: GraphModel):
    n = model.n
    beta = model.beta_fraction
    iu, ju = np.triu_indices(n, 1)
    if 2 ** len(iu) > ENUMERATION_LIMIT:
        raise TooLargeToEnumerate("too many graphs")
    for bits in itertools.product((0, 1), repeat=len(iu)):
        adj = np.zeros((n, n), dtype=np.int64)
        adj[iu, ju] = bits
        adj += adj.T
        lap = np.diag(adj.sum(axis=1)) - adj
        k = sum(bits)
        prob = beta**k * (1 - beta) ** (len(iu) - k)
        if prob:
            yield lap[:-1, :-1], prob


def exact_hom_moment(model: MatrixModel | GraphModel, G: PGroupType, d: int) -> Fraction:
    """E #Hom(cok, G) as an exact rational, enumerating every outcome.

    For graphs the cokernel is the sandpile group, read from the reduced
    Laplacian; a disconnected graph contributes its free part as saturated
    factors, each worth |G|.
    """
    p = G.p
    if G.rank and G.lam.parts[0] > d:
        raise LevelTooLow(f"p^{d} does not kill {G}")
    if isinstance(model, GraphModel):
        outcomes = _graph_assignments(model)
    else:
        outcomes = _matrix_assignments(model, d, p)
    total = Fraction(0)
    for a, prob in outcomes:
        if a.size == 0:
            c = CokernelClass(p, d, Partition(), 0)
        else:
            c = cokernel_class(a, p, d)
        total += prob * hom_count_from_class(c, G)
    return total


# ---------------------------------------------------------------- trivial part


def _pair_values(spec: PairingSpec, g: np.ndarray, h: np.ndarray, n: int) -> np.ndarray:
    """Boolean per tuple: all U(g_k, h_k) and B over ordered k != l vanish."""
    ok = np.ones(len(g), dtype=bool)
    for k in range(n):
        ok &= spec.U(g[:, k], h[:, k]) == 0
    for k in range(n):
        for l in range(n):
            if k != l:
                ok &= spec.B(g[:, k], h[:, k], g[:, l], h[:, l]) == 0
    return ok


def trivial_part_count(spec: PairingSpec, n: int) -> int:
    """|G_tr|: tuples in (G^2)^n on which every U(g_k) and B(g_k, g_l) vanishes."""
    g, h = _tuples(spec.G, n)
    return int(_pair_values(spec, g, h, n).sum())


def generating_tuples(W: PGroupType, n: int) -> Fraction:
    """Number of n-tuples generating a group of type W: |W|^n prod_{i<=r} (1 - p^(i-1-n))."""
    out = Fraction(W.order) ** n
    for i in range(1, W.rank + 1):
        out *= 1 - Fraction(W.p) ** (i - 1 - n)
    return out


def _square_group(G: PGroupType) -> ConcreteGroup:
    return G.concrete().square()


def _split(G: PGroupType, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = G.rank
    return coords[..., :r], coords[..., r:]


def isotropic_subgroups(spec: PairingSpec) -> list[SubgroupRecord]:
    """Subgroups W of G^2 with U = 0 on W and B = 0 on W x W (all sizes).

    For the graph flavor the relevant forms are those of the symmetric flavor.
    """
    flavor = "U2B2" if spec.flavor == "U4B4" else spec.flavor
    base = PairingSpec(flavor, spec.G, spec.d)
    sq = _square_group(spec.G)
    out = []
    for W in enumerate_subgroups(sq):
        g, h = _split(spec.G, sq.coords[W.code_array()])
        if np.any(base.U(g, h)):
            continue
        B = base.B(g[:, None], h[:, None], g[None, :], h[None, :])
        if not np.any(B):
            out.append(W)
    return out


def trivial_part_census(spec: PairingSpec, n: int) -> Fraction:
    """|G_tr| assembled from isotropic subgroups W and the generating-tuple count.

    A tuple lies in G_tr exactly when the subgroup it generates is isotropic,
    so |G_tr| = sum_W gen_n(W).  For graphs the differences w_k - w_n generate
    an isotropic subgroup of the symmetric flavor and w_n is free, giving
    |G|^2 sum_W gen_(n-1)(W).
    """
    if spec.flavor == "U4B4":
        subs = isotropic_subgroups(spec)
        return Fraction(spec.G.order) ** 2 * sum(generating_tuples(W.group_type(), n - 1) for W in subs)
    return sum((generating_tuples(W.group_type(), n) for W in isotropic_subgroups(spec)), Fraction(0))


def graph_coset_agreement(spec: PairingSpec, n: int) -> bool:
    """Direct membership in G_tr versus the difference-subgroup criterion, on every tuple."""
    if spec.flavor != "U4B4":
        raise ValueError("the coset criterion concerns the graph flavor")
    g, h = _tuples(spec.G, n)
    direct = _pair_values(spec, g, h, n)
    iso = {W.codes for W in isotropic_subgroups(spec)}
    sq = _square_group(spec.G)
    w = np.concatenate([g, h], axis=-1)
    agree = True
    for t in range(len(w)):
        diffs = sq.encode(w[t, :-1] - w[t, -1])
        crit = sq.generated(int(x) for x in diffs) in iso
        agree &= bool(crit) == bool(direct[t])
    return agree


# ---------------------------------------------------------------- isotropic census


@dataclass(frozen=True)
class IsotropicCensus:
    ambient: ConcreteGroup
    flavor: str
    subgroups: tuple[SubgroupRecord, ...] = field(default_factory=tuple)

    @property
    def max_count(self) -> int:
        return len(self.subgroups)


def isotropic_census(G: PGroupType, flavor: str) -> IsotropicCensus:
    """Subgroups of G^2 of order |G| that are isotropic for B_Alt, or for B_Sym with P = 0.

    B_Alt((g,h),(g',h')) = g.h' - g'.h, B_Sym = g.h' + g'.h and P(g,h) = g.h.
    """
    if flavor not in ("B_Alt", "B_Sym"):
        raise ValueError("flavor must be B_Alt or B_Sym")
    sq = _square_group(G)
    if sq.order > ENUMERATION_GUARD:
        raise GroupTooLarge(f"|G|^2 = {sq.order} exceeds the enumeration guard")
    d = G.lam.parts[0] if G.rank else 1
    spec = PairingSpec("U3B3" if flavor == "B_Alt" else "U2B2", G, d)
    found = tuple(W for W in isotropic_subgroups(spec) if W.order == G.order)
    return IsotropicCensus(sq, flavor, found)


def isotropic_formula(G: PGroupType, flavor: str) -> int:
    """sum_{H <= G} |Sym^2 H| for B_Alt, sum |wedge^2 H| for B_Sym."""
    f = sym_square_order if flavor == "B_Alt" else ext_square_order
    return sum(f(H.group_type()) for H in enumerate_subgroups(G))


# ---------------------------------------------------------------- sine sums and bounds


@dataclass(frozen=True)
class AffineMap:
    """x -> sum_i c_i x_i + a (mod m) on tuples of residues."""

    coeffs: tuple[int, ...]
    const: int
    m: int

    def __call__(self, coords: np.ndarray) -> np.ndarray:
        return (np.asarray(coords) @ np.asarray(self.coeffs, dtype=np.int64) + self.const) % self.m

    def well_defined_on(self, moduli: Sequence[int]) -> bool:
        return all((c * q) % self.m == 0 for c, q in zip(self.coeffs, moduli))


def sin_sum_check(H: SubgroupRecord, L: AffineMap) -> float:
    """sum_{h in H} sin^2(pi L(h) / m); equals |H|/2 when L is non-constant on H."""
    if not L.well_defined_on(H.ambient.moduli):
        raise ValueError("map is not well defined on the ambient group")
    values = L(H.ambient.coords[H.code_array()])
    if np.all(values == values[0]):
        raise ConstantMap(f"L is constant ({int(values[0])}) on H")
    return math.fsum(math.sin(math.pi * int(v) / L.m) ** 2 for v in values)


def zero_column_bound(k: int) -> Fraction:
    """1/(k+1)!, the asymptotic lower bound on P(at least k zero columns)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return Fraction(1, math.factorial(k + 1))


def general_sur_moment_z2(n: int, q) -> float:
    """Exact E #Sur(cok A, Z/2) for n x n general A whose entries are odd with probability q.

    Columns are independent, so sum_x P(x^T A = 0) groups by the weight w of x,
    and a column meets x evenly with probability (1 + (1 - 2q)^w) / 2.
    """
    if n < 1:
        raise ValueError("n must be positive")
    with mpmath.workdps(40):
        q = mpmath.mpf(q.numerator) / q.denominator if isinstance(q, Fraction) else mpmath.mpf(q)
        hom = mpmath.fsum(mpmath.binomial(n, w) * ((1 + (1 - 2 * q) ** w) / 2) ** n for w in range(n + 1))
        return float(hom - 1)

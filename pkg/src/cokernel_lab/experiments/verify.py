"""The oracle battery: every closed form against an independent brute-force count.

Each check yields records {check, case, computed, expected, pass}.  Expected
values can be overridden through ``inject`` to confirm that a wrong table is
caught.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterator

import mpmath
import numpy as np

from ..groups import (
    PGroupType,
    aut_order,
    enumerate_subgroups,
    ext_square_order,
    partitions,
    sym_square_order,
)
from ..linalg import CokernelClass
from ..models import GraphModel, MatrixModel, spike01, spike_uniform, trial_stream
from ..oracle import (
    FLAVORS,
    AffineMap,
    PairingSpec,
    count_automorphisms,
    exact_hom_moment,
    fourier_hom_moment,
    graph_coset_agreement,
    hom_count_brute,
    hom_count_from_class,
    isotropic_census,
    isotropic_formula,
    sin_sum_check,
    sur_count,
    sur_count_brute,
    tensor_square_orders,
    trivial_part_census,
    trivial_part_count,
)
from ..universal import KINDS, corank_tail, general_constant, odd_constant, rank_limit_prob, sandpile_limit_prob

Record = dict


def groups_up_to(p: int, max_order: int) -> list[PGroupType]:
    out = []
    N = 0
    while p**N <= max_order:
        out.extend(PGroupType(p, lam) for lam in partitions(N))
        N += 1
    return out


def group_key(G: PGroupType) -> str:
    return f"{G.p}:{','.join(map(str, G.lam.parts))}"


def _plain(x):
    """JSON-ready copy: ints, bools and dicts stay, other numbers become floats."""
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (bool, int, str)):
        return x
    return float(x)


def _record(check: str, case: str, computed, expected, ok: bool | None = None) -> Record:
    if ok is None:
        ok = computed == expected
    return {"check": check, "case": case, "computed": _plain(computed), "expected": _plain(expected), "pass": bool(ok)}


def check_aut_order(inject: dict) -> Iterator[Record]:
    table = {str(k): int(v) for k, v in inject.get("aut_order", {}).items()}
    for p in (2, 3):
        for G in groups_up_to(p, 256):
            expected = table.get(group_key(G), aut_order(G))
            yield _record("aut_order", str(G), count_automorphisms(G), expected)


def check_tensor_squares(inject: dict) -> Iterator[Record]:
    for p in (2, 3):
        for N in range(7):
            for lam in partitions(N):
                G = PGroupType(p, lam)
                t = tensor_square_orders(G)
                computed = {"ext": t["ext"], "sym": t["sym"], "product": t["ext"] * t["sym"]}
                expected = {"ext": ext_square_order(G), "sym": sym_square_order(G), "product": t["tensor"]}
                yield _record("tensor_squares", str(G), computed, expected)


def check_hom_sur(inject: dict) -> Iterator[Record]:
    for p in (2, 3):
        gs = groups_up_to(p, 16)
        for X in gs:
            for G in gs:
                d = max(X.lam.parts[0] if X.rank else 1, G.lam.parts[0] if G.rank else 1) + 1
                cls = CokernelClass.from_exponents(X.lam.parts, p, d)
                hom = hom_count_from_class(cls, G)
                sur = sur_count(cls, G)
                sum_sur = sum(sur_count(cls, K.group_type()) for K in enumerate_subgroups(G))
                computed = {"hom": hom, "sur": sur, "sum_sur_over_subgroups": sum_sur}
                expected = {"hom": hom_count_brute(X, G), "sur": sur_count_brute(X, G), "sum_sur_over_subgroups": hom}
                yield _record("hom_sur_moebius", f"X={X} G={G}", computed, expected)


def fourier_configs() -> Iterator[tuple[str, MatrixModel | GraphModel, PGroupType, int]]:
    """n <= 2, p^d in {2, 3, 4}, |G| <= 4, both entry laws, all four flavors."""
    for m, (p, d) in ((2, (2, 1)), (3, (3, 1)), (4, (2, 2))):
        gs = [G for G in groups_up_to(p, 4) if not G.rank or G.lam.parts[0] <= d]
        for law, D in (("spike01", spike01(Fraction(3, 10), m)), ("spike_uniform", spike_uniform(Fraction(3, 10), m))):
            for n in (1, 2):
                models = [(k, MatrixModel(k, n, D)) for k in ("general", "symmetric", "alternating")]
                models.append(("graph", GraphModel(n, D.nonzero_prob)))
                for kind, M in models:
                    for G in gs:
                        yield f"{kind} n={n} m={m} {law} G={G}", M, G, d


def check_fourier(inject: dict) -> Iterator[Record]:
    for case, M, G, d in fourier_configs():
        exact = exact_hom_moment(M, G, d)
        fourier = fourier_hom_moment(M, G, d)
        yield _record("fourier_vs_exact", case, fourier, float(exact), abs(fourier - float(exact)) <= 1e-9)


CENSUS_GROUPS = (PGroupType(2, (1,)), PGroupType(3, (1,)), PGroupType(2, (2,)), PGroupType(2, (1, 1)))


def check_isotropic(inject: dict) -> Iterator[Record]:
    for G in CENSUS_GROUPS:
        for flavor in ("B_Alt", "B_Sym"):
            yield _record("isotropic_census", f"{flavor} G={G}", isotropic_census(G, flavor).max_count, isotropic_formula(G, flavor))


def check_trivial_part(inject: dict) -> Iterator[Record]:
    for G in (PGroupType(2, (1,)), PGroupType(3, (1,)), PGroupType(2, (2,))):
        d = G.lam.parts[0]
        for flavor in FLAVORS:
            spec = PairingSpec(flavor, G, d)
            for n in (1, 2, 3):
                census = trivial_part_census(spec, n)
                yield _record("trivial_part", f"{flavor} G={G} n={n}", trivial_part_count(spec, n), int(census), census.denominator == 1 and trivial_part_count(spec, n) == census)
        spec = PairingSpec("U4B4", G, d)
        for n in (2, 3):
            yield _record("trivial_part", f"graph coset criterion G={G} n={n}", graph_coset_agreement(spec, n), True)


def check_sine_sums(inject: dict) -> Iterator[Record]:
    rng = trial_stream(0, 0, 0, 0)
    for G in (PGroupType(2, (2, 1)), PGroupType(3, (1, 1)), PGroupType(2, (3,))):
        m = G.exponent
        moduli = G.moduli
        for H in enumerate_subgroups(G):
            if H.order == 1:
                continue
            for _ in range(3):
                # coefficient c_i must kill the i-th cyclic factor: multiples of m / q_i
                coeffs = tuple(int(rng.integers(0, q)) * (m // q) for q in moduli)
                L = AffineMap(coeffs, int(rng.integers(0, m)), m)
                values = L(H.ambient.coords[H.code_array()])
                if np.all(values == values[0]):
                    continue
                s = sin_sum_check(H, L)
                yield _record("sine_sum", f"G={G} |H|={H.order} L={coeffs}+{L.const}", s, H.order / 2, abs(s - H.order / 2) <= 1e-9)


def check_constants(inject: dict) -> Iterator[Record]:
    """Products against mpmath's q-Pochhammer, an independent evaluator."""

    def close(a, b, tol=1e-9):
        return abs(a - b) <= tol

    def qp(a, q):
        return float(mpmath.qp(a, q))

    general2 = qp(0.5, 0.5)
    odd2 = qp(0.5, 0.25)
    cases = [
        ("prod (1 - 2^-i)", general_constant(2).value, general2),
        ("prod (1 - 2^(1-2i))", odd_constant(2).value, odd2),
        ("prod (1 - 3^-i)", general_constant(3).value, qp(1 / 3, 1 / 3)),
        ("sandpile Z/2", sandpile_limit_prob(PGroupType(2, (1,))), odd2 / 2),
        # P(corank = k) = p^(-k^2) prod (1 - p^-i) / prod_{i<=k} (1 - p^-i)^2
        ("general p=2 P(corank >= 3)", corank_tail("general", 2, 3), 1 - general2 * (1 + 0.5 / 0.25 + 2**-4 / (0.5 * 0.75) ** 2)),
    ]
    for case, computed, expected in cases:
        yield _record("constants", case, computed, expected, close(computed, expected))
    for kind in KINDS:
        for p in (2, 3):
            total = math.fsum(rank_limit_prob(kind, p, k) for k in range(40))
            yield _record("constants", f"rank law total {kind} p={p}", total, 1.0, close(total, 1.0))


BATTERY: dict[str, Callable[[dict], Iterator[Record]]] = {
    "aut_order": check_aut_order,
    "tensor_squares": check_tensor_squares,
    "hom_sur_moebius": check_hom_sur,
    "fourier_vs_exact": check_fourier,
    "isotropic_census": check_isotropic,
    "trivial_part": check_trivial_part,
    "sine_sum": check_sine_sums,
    "constants": check_constants,
}


def run_verify(inject: dict | None = None, only: list[str] | None = None) -> dict:
    inject = inject or {}
    records = []
    for name, check in BATTERY.items():
        if only and name not in only:
            continue
        records.extend(check(inject))
    failed = sorted({r["check"] for r in records if not r["pass"]})
    return {"all_pass": not failed, "failed_checks": failed, "count": len(records), "checks": records}

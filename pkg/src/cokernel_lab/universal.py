"""Limiting distributions of random cokernels, evaluated exactly.

Every infinite product is a family ``prod_{i >= start} (1 - q^(a i + b))`` with
0 < q < 1, truncated once a geometric bound on the remaining log-product drops
below the tolerance.  Arithmetic runs in mpmath at 100 bits.

Matrix kinds are ``general``, ``symmetric``, ``alternating-even``,
``alternating-odd`` and ``graph`` (sandpile groups, same law as symmetric).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import mpmath

from .errors import MissingPrime, NonconvergentSpec
from .groups import (
    AbGroupType,
    PGroupType,
    aut_order,
    count_symmetric_perfect_pairings,
    ext_square_order,
    sp_order,
    sym_square_order,
)

TOL = 1e-12
PRECISION_BITS = 100
MAX_TERMS = 100_000

KINDS = ("general", "symmetric", "alternating-even", "alternating-odd", "graph")
_ALIASES = {
    "non-symmetric": "general",
    "nonsymmetric": "general",
    "sandpile": "graph",
    "alternating": "alternating-even",
}


def parse_kind(kind: str) -> str:
    kind = _ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    return kind


@dataclass(frozen=True)
class LimitFormulaResult:
    """A formula value with the truncation index reached and a bound on the error."""

    value: mpmath.mpf
    truncation_index: int
    tail_bound: float

    def __float__(self) -> float:
        return float(self.value)

    def scaled(self, factor) -> "LimitFormulaResult":
        """Multiply by an exact or high-precision factor; the error bound scales too."""
        with mpmath.workprec(PRECISION_BITS):
            f = mpmath.mpf(factor.numerator) / factor.denominator if isinstance(factor, Fraction) else mpmath.mpf(factor)
            return LimitFormulaResult(self.value * f, self.truncation_index, self.tail_bound * abs(float(f)))

    def to_json(self) -> dict:
        return {
            "value": float(self.value),
            "value_str": mpmath.nstr(self.value, 20),
            "truncation_index": self.truncation_index,
            "tail_bound": self.tail_bound,
        }


def truncated_product(
    q, a: int = 1, b: int = 0, start: int = 1, stop: int | None = None, tol: float = TOL
) -> LimitFormulaResult:
    """prod_{i = start}^{stop} (1 - q^(a i + b)); ``stop=None`` means infinity.

    For the infinite case the remaining factors satisfy
    ``-log prod_{i > N} (1 - x_i) <= x_{N+1} / ((1 - x_{N+1}) (1 - q^a))``,
    and since the value is at most 1 the absolute error is at most
    ``exp(bound) - 1``.
    """
    with mpmath.workprec(PRECISION_BITS):
        q = mpmath.mpf(q.numerator) / q.denominator if isinstance(q, Fraction) else mpmath.mpf(q)
        if not 0 < q < 1:
            raise NonconvergentSpec(f"base q={q} must lie in (0, 1)")
        if stop is None and a <= 0:
            raise NonconvergentSpec("an infinite product needs a positive slope a")

        def x(i):
            return q ** (a * i + b)

        value = mpmath.mpf(1)
        i = start
        while stop is None or i <= stop:
            xi = x(i)
            if xi >= 1:
                raise NonconvergentSpec(f"term {i} is 1 - {xi} <= 0")
            value *= 1 - xi
            if stop is None:
                nxt = x(i + 1)
                if nxt < 1:
                    bound = nxt / ((1 - nxt) * (1 - q**a))
                    err = float(mpmath.expm1(bound))
                    if err < tol:
                        return LimitFormulaResult(value, i, err)
                if i - start > MAX_TERMS:
                    raise NonconvergentSpec("product did not reach the tolerance")
            i += 1
        return LimitFormulaResult(value, i - 1, 0.0)


def _combine(*parts: LimitFormulaResult) -> LimitFormulaResult:
    """Product of values in [0, 1]; errors add to first order."""
    with mpmath.workprec(PRECISION_BITS):
        value = mpmath.mpf(1)
        for r in parts:
            value *= r.value
        return LimitFormulaResult(
            value, max(r.truncation_index for r in parts), sum(r.tail_bound for r in parts)
        )


def _zero(index: int = 0) -> LimitFormulaResult:
    return LimitFormulaResult(mpmath.mpf(0), index, 0.0)


def _inv(p: int) -> Fraction:
    return Fraction(1, p)


def general_constant(p: int) -> LimitFormulaResult:
    """prod_{i >= 1} (1 - p^-i)."""
    return truncated_product(_inv(p), 1, 0)


def odd_constant(p: int, start: int = 1) -> LimitFormulaResult:
    """prod_{i >= start} (1 - p^(1 - 2i))."""
    return truncated_product(_inv(p), 2, -1, start)


def cokernel_limit(kind: str, H: PGroupType) -> LimitFormulaResult:
    """Limit of P(cok(A) ~ H) (for alternating-odd: cok(A) ~ Z_p x H)."""
    kind = parse_kind(kind)
    p = H.p
    if kind == "general":
        return general_constant(p).scaled(Fraction(1, aut_order(H)))
    if kind in ("symmetric", "graph"):
        pairings = count_symmetric_perfect_pairings(H)
        return odd_constant(p).scaled(Fraction(pairings, H.order * aut_order(H)))
    if not H.is_square():
        return _zero()
    if kind == "alternating-even":
        return odd_constant(p).scaled(Fraction(H.order, sp_order(H)))
    return odd_constant(p, 2).scaled(Fraction(1, sp_order(H)))


def cokernel_limit_prob(kind: str, H: PGroupType) -> float:
    return float(cokernel_limit(kind, H))


def sandpile_limit_prob(H: PGroupType) -> float:
    """Limit of P(Sylow-p of the sandpile group ~ H); same law as symmetric matrices."""
    return float(cokernel_limit("graph", H))


def rank_limit(kind: str, p: int, k: int) -> LimitFormulaResult:
    """Limit law of the rank over F_p.

    ``general`` and ``symmetric``/``graph``: probability of corank k.
    ``alternating-even``: corank 2k (n even).  ``alternating-odd``: corank
    2k + 1 (n odd).
    """
    kind = parse_kind(kind)
    if k < 0:
        raise ValueError("k must be nonnegative")
    inv = _inv(p)
    if kind == "general":
        den = truncated_product(inv, 1, 0, 1, k)
        num = general_constant(p)
        return _divide(num, [den, den], Fraction(1, p ** (k * k)))
    if kind in ("symmetric", "graph"):
        num = truncated_product(inv, 1, 0, k + 1)
        den = truncated_product(inv, 2, 0, 1)
        return _divide(num, [den], Fraction(1, p ** (k * (k + 1) // 2)))
    den = truncated_product(inv, 2, 0, 1, k)
    if kind == "alternating-even":
        num = truncated_product(inv, 2, 1, k)
        return _divide(num, [den], Fraction(1, p ** (k * (2 * k - 1))))
    num = truncated_product(inv, 2, 1, k + 1)
    return _divide(num, [den], Fraction(1, p ** (k * (2 * k + 1))))


def _divide(num: LimitFormulaResult, dens: Iterable[LimitFormulaResult], factor: Fraction) -> LimitFormulaResult:
    with mpmath.workprec(PRECISION_BITS):
        value = num.value * mpmath.mpf(factor.numerator) / factor.denominator
        scale = float(factor)
        relative = 0.0
        index = num.truncation_index
        for d in dens:
            value /= d.value
            scale /= float(d.value)
            relative += d.tail_bound / float(d.value)
            index = max(index, d.truncation_index)
        # first-order propagation of the numerator and denominator errors
        return LimitFormulaResult(value, index, num.tail_bound * scale + float(value) * relative)


def rank_limit_prob(kind: str, p: int, k: int) -> float:
    return float(rank_limit(kind, p, k))


def corank_limit_prob(kind: str, p: int, corank: int) -> float:
    """Limit of P(n - rank_p(A) = corank); zero for the wrong parity in alternating kinds."""
    kind = parse_kind(kind)
    if kind == "alternating-even":
        return rank_limit_prob(kind, p, corank // 2) if corank % 2 == 0 else 0.0
    if kind == "alternating-odd":
        return rank_limit_prob(kind, p, corank // 2) if corank % 2 == 1 else 0.0
    return rank_limit_prob(kind, p, corank)


def moment_limit(kind: str, G: PGroupType) -> int:
    """Limit of E #Sur(cok(A), G)."""
    kind = parse_kind(kind)
    if kind == "general":
        return 1
    if kind in ("symmetric", "graph"):
        return ext_square_order(G)
    return sym_square_order(G)


def multi_prime_limit(kind: str, H: AbGroupType, primes: Iterable[int]) -> LimitFormulaResult:
    """Limit of P(P-primary part of cok(A) ~ H) for a finite prime set P."""
    primes = sorted(set(int(p) for p in primes))
    missing = [p for p in H.primes if p not in primes]
    if missing:
        raise MissingPrime(f"primes {missing} divide |H| but are not in {primes}")
    return _combine(*(cokernel_limit(kind, H.component(p)) for p in primes))


def multi_prime_limit_prob(kind: str, H: AbGroupType, primes: Iterable[int]) -> float:
    return float(multi_prime_limit(kind, H, primes))


def corank_tail(kind: str, p: int, at_least: int) -> float:
    """Limit of P(corank >= at_least), as 1 minus the head of the distribution."""
    head = math.fsum(corank_limit_prob(kind, p, k) for k in range(at_least))
    return max(0.0, 1.0 - head)

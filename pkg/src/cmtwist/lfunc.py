"""Central L-values by the smoothed approximate functional equation.

With Lambda(s) = C^s Gamma(s) L(s), C = sqrt(q * conductor-norm)/(2*pi), and
theta(t) = sum a_n exp(-n t / C), splitting the Mellin integral at delta and
folding the dual side through the functional equation gives, at s = 1,

    L(1) = sum_n (a_n/n) e^(-n*delta/C) + w * sum_n (conj(a_n)/n) e^(-n/(delta*C)).

Two smoothing parameters determine (L(1), w) as a 2x2 linear solve; a third
validates the pair (and with it the conjugate-dual hypothesis and the
conductor). The root number is never taken from an epsilon-factor formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpc, mpfr

from . import numerics
from .errors import InconsistentFunctionalEquation
from .hecke import (
    CharacterEmbedding,
    CoefficientSeries,
    GrossCharacter,
    character_embeddings,
    twisted_coefficients,
)
from .numerics import PrecisionPolicy

_DELTAS = (Fraction(1), Fraction(11, 10), Fraction(5, 4))


@dataclass(frozen=True, eq=False)
class LValueResult:
    value: mpc
    error_bound: mpfr
    root_number: mpc
    method: str
    params: dict = field(default_factory=dict)


def afe_cutoff(q: int, d: int, bits: int) -> mpfr:
    with numerics.working_precision(bits):
        return d * q / (2 * gmpy2.const_pi())


def required_series_length(q: int, d: int, policy: PrecisionPolicy) -> int:
    """Series length making every smoothed tail < 2^-(P+16)."""
    bits = policy.work_bits
    C = float(afe_cutoff(q, d, 64))
    slowest = float(max(_DELTAS))  # the dual sum at the largest delta decays slowest
    return int(math.ceil(C * (bits * math.log(2) + 24) * slowest)) + 8


def _tail_bound(N: int, rate: mpfr, bits: int) -> mpfr:
    """Bound sum_{n>N} d(n) sqrt(n)/n * e^(-n*rate) <= sum_{n>N} sqrt(n) e^(-n*rate).

    With n = N + k and sqrt(N+k) <= sqrt(N)*(1+k):
    tail <= sqrt(N) e^(-N*rate) * sum_{k>=1} (1+k) g^k,  g = e^(-rate).
    """
    with numerics.working_precision(bits):
        g = gmpy2.exp(-rate)
        factor = (2 * g - g * g) / (1 - g) ** 2
        return gmpy2.sqrt(mpfr(N)) * gmpy2.exp(-N * rate) * factor


def _smoothed_sums(series: CoefficientSeries, delta: Fraction, bits: int):
    """S1 = sum a_n/n e^(-n*delta/C), S2 = sum conj(a_n)/n e^(-n/(delta*C))."""
    with numerics.working_precision(bits):
        C = afe_cutoff(series.q, series.d, bits)
        dlt = numerics.to_real(delta, bits)
        r1 = dlt / C
        r2 = 1 / (dlt * C)
        e1 = gmpy2.exp(-r1)
        e2 = gmpy2.exp(-r2)
        s1 = mpc(0)
        s2 = mpc(0)
        p1 = mpfr(1)
        p2 = mpfr(1)
        for idx, an in enumerate(series.a):
            n = idx + 1
            if n % 4096 == 0:
                # refresh the exponential powers to stop drift
                p1 = gmpy2.exp(-r1 * n)
                p2 = gmpy2.exp(-r2 * n)
            else:
                p1 = p1 * e1
                p2 = p2 * e2
            if an != 0:
                s1 += an * (p1 / n)
                s2 += an.conjugate() * (p2 / n)
        t1 = _tail_bound(series.N, r1, bits)
        t2 = _tail_bound(series.N, r2, bits)
        return s1, s2, t1, t2


def l_value_afe(series: CoefficientSeries, policy: PrecisionPolicy = PrecisionPolicy()) -> LValueResult:
    """Solve for (L(1), w) from two smoothings; validate with a third."""
    bits = policy.work_bits
    need = required_series_length(series.q, series.d, policy)
    if series.N < need:
        raise ValueError(f"series too short: N = {series.N} < required {need}")
    with numerics.working_precision(bits):
        (s1a, s2a, t1a, t2a) = _smoothed_sums(series, _DELTAS[0], bits)
        (s1b, s2b, t1b, t2b) = _smoothed_sums(series, _DELTAS[1], bits)
        det = s2b - s2a
        if det == 0:
            raise InconsistentFunctionalEquation("degenerate smoothing system")
        # L - w*S2(d) = S1(d) for both deltas
        w = (s1a - s1b) / det
        value = (s1a * s2b - s1b * s2a) / det
        (s1c, s2c, t1c, t2c) = _smoothed_sums(series, _DELTAS[2], bits)
        residual = abs(value - s1c - w * s2c)
        scale = max(mpfr(1), abs(value))
        if residual > mpfr(2) ** (-(bits // 2)) * scale:
            raise InconsistentFunctionalEquation(
                f"validation residual {residual:.3e}: wrong conductor or coefficients"
            )
        # propagate the truncation tails through the linear solve
        amp = (1 + abs(s2a) + abs(s2b)) / abs(det)
        err = (t1a + t1b + abs(w) * (t2a + t2b)) * amp + residual
        return LValueResult(
            value=value,
            error_bound=mpfr(err),
            root_number=w,
            method="afe",
            params={
                "C": float(afe_cutoff(series.q, series.d, 64)),
                "N": series.N,
                "deltas": tuple(str(d) for d in _DELTAS),
                "d": series.d,
                "iota": series.iota,
            },
        )


_series_cache: dict[tuple, CoefficientSeries] = {}
_lvalue_cache: dict[tuple, tuple[LValueResult, ...]] = {}


def primitive_series(
    chi: GrossCharacter, emb: CharacterEmbedding, d: int, policy: PrecisionPolicy
) -> CoefficientSeries:
    """Primitive coefficient series of the d-twist under one embedding."""
    N = required_series_length(chi.field.q, d, policy)
    key = (chi.field.q, emb.iota, d, policy.work_bits, N)
    if key not in _series_cache:
        _series_cache[key] = twisted_coefficients(chi, emb, d, d, N)
    return _series_cache[key]


def full_lvalues(
    chi: GrossCharacter, d: int, policy: PrecisionPolicy = PrecisionPolicy()
) -> tuple[LValueResult, ...]:
    """L(conj-character twist, 1) for every embedding, cached per (q, d, P)."""
    key = (chi.field.q, d, policy.work_bits)
    if key not in _lvalue_cache:
        embs = character_embeddings(chi, policy.work_bits)
        _lvalue_cache[key] = tuple(
            l_value_afe(primitive_series(chi, e, d, policy), policy) for e in embs
        )
    return _lvalue_cache[key]


def imprimitivity_factor(d: int, R: int) -> Fraction:
    """prod over primes r | R/d of (1 - conj(phi_d)((r))/r^2) = prod (1 + 1/r)."""
    if R % d:
        raise ValueError("d must divide R")
    out = Fraction(1)
    rest = R // d
    r = 2
    while r * r <= rest:
        if rest % r == 0:
            out *= Fraction(r + 1, r)
            while rest % r == 0:
                rest //= r
        r += 1
    if rest > 1:
        out *= Fraction(rest + 1, rest)
    return out


def partial_l_afe(
    chi: GrossCharacter,
    emb: CharacterEmbedding,
    d: int,
    R: int,
    class_j: int,
    policy: PrecisionPolicy = PrecisionPolicy(),
) -> mpc:
    """R-imprimitive partial L-value at s=1 for one ideal class, one embedding.

    Class-character orthogonality: the h embeddings are exactly the class-
    character twists of one another, so the class-j component under embedding
    m is (1/h) sum_l zeta_h^(l*j) L(embedding m+l); the removed Euler factors
    at primes r | R/d contribute the exact rational imprimitivity factor.
    """
    bits = policy.work_bits
    h = chi.h
    lvals = full_lvalues(chi, d, policy)
    with numerics.working_precision(bits):
        if h == 1:
            acc = lvals[0].value
        else:
            two_pi = 2 * gmpy2.const_pi()
            acc = mpc(0)
            for l in range(h):
                zeta = gmpy2.exp(mpc(0, two_pi * l * class_j / h))
                acc += zeta * lvals[(emb.iota + l) % h].value
            acc = acc / h
        return acc * numerics.to_real(imprimitivity_factor(d, R), bits)

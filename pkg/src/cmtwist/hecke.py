"""The weight-1 Hecke character of conductor sqrt(-q)*O_K and its twists.

On principal ideals the character is (alpha) -> eps(alpha)*alpha, where eps
is the quadratic-residue symbol on (O_K / sqrt(-q))^* ≅ F_q^*. Because
eps(-1) = -1 for q ≡ 3 mod 4 the product eps(alpha)*alpha is independent of
the sign of the generator. Values on non-principal ideals live in the CM
field T = K(t) with t^h = eps(pi0)*pi0 for a fixed generator ideal p0 of the
class group and pi0 the canonical generator of p0^h; the h complex roots of
x^h - c realize the h embeddings of T over K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import gmpy2
from gmpy2 import mpc

from . import numerics
from .errors import NotCoprime, RamifiedAtConductor
from .quadfield import (
    ClassGroup,
    ImagQuadField,
    KElement,
    KIdeal,
    class_group,
    jacobi,
    prime_ideal_list,
    principal_generator,
    reduce_to_class,
)


@dataclass(frozen=True)
class CharValue:
    """Exact character value u * t^j in T, with u in K and 0 <= j < h."""

    j: int
    u: KElement


@dataclass(frozen=True, eq=False)
class GrossCharacter:
    field: ImagQuadField
    group: ClassGroup
    p0: KIdeal
    pi0: KElement
    c: KElement  # eps(pi0) * pi0; the minimal equation of t is t^h = c

    @property
    def h(self) -> int:
        return self.group.h

    def eps(self, alpha: KElement) -> int:
        """Quadratic-residue symbol of alpha modulo sqrt(-q)."""
        q = self.field.q
        if not alpha.is_integral():
            raise ValueError("eps is defined on integral elements")
        # omega = (1 + sqrt(-q))/2 maps to (q+1)/2 in O_K/sqrt(-q) ≅ Z/q
        r = (int(alpha.a) + int(alpha.b) * ((q + 1) // 2)) % q
        if r == 0:
            raise RamifiedAtConductor("element lies in the conductor")
        return jacobi(r, q)

    def value_on_principal(self, alpha: KElement) -> KElement:
        return self.eps(alpha) * alpha

    def char_value(self, b: KIdeal) -> CharValue:
        """phi(b) = u * t^j, via b * p0^(h-j) = (g) and u = eps(g)*g/c."""
        if math.gcd(b.norm(), self.field.q) != 1:
            raise RamifiedAtConductor(f"{b} shares a factor with the conductor")
        j = reduce_to_class(b, self.group)
        if j == 0:
            g = principal_generator(b)
            return CharValue(0, self.value_on_principal(g))
        g = principal_generator(b * self.p0 ** (self.h - j))
        return CharValue(j, (self.eps(g) * g) / self.c)

    def value_mul(self, x: CharValue, y: CharValue) -> CharValue:
        """Multiplication in T; t^h = c folds into the K-part."""
        j = x.j + y.j
        u = x.u * y.u
        if j >= self.h:
            j -= self.h
            u = u * self.c
        return CharValue(j, u)

    def value_norm(self, x: CharValue) -> Fraction:
        """|phi(b)|^2 as an exact rational (equals N(b))."""
        nc = self.c.norm()
        # |t|^2 = N(c)^(1/h) = N(p0); exact because N(c) = N(p0)^h
        np0 = self.p0.norm()
        assert nc == Fraction(np0) ** self.h
        return x.u.norm() * Fraction(np0) ** x.j


@dataclass(frozen=True, eq=False)
class CharacterEmbedding:
    """The embedding of T sending t to the root t0 * zeta_h^iota of x^h - c."""

    iota: int
    h: int
    t: mpc
    bits: int


def embed_value(emb: CharacterEmbedding, v: CharValue) -> mpc:
    with numerics.working_precision(emb.bits):
        return v.u.embed(emb.bits) * emb.t ** v.j


@lru_cache(maxsize=None)
def build_character(field: ImagQuadField) -> GrossCharacter:
    """Construct the character data deterministically from the class group."""
    G = class_group(field)
    p0 = G.generator_ideal
    if G.h == 1:
        one = field.one()
        return GrossCharacter(field, G, p0, one, one)
    chi = GrossCharacter(field, G, p0, field.one(), field.one())  # temp for eps
    pi0 = principal_generator(p0 ** G.h)
    c = chi.eps(pi0) * pi0
    return GrossCharacter(field, G, p0, pi0, c)


_embedding_cache: dict[tuple[int, int], tuple[CharacterEmbedding, ...]] = {}


def character_embeddings(chi: GrossCharacter, bits: int) -> tuple[CharacterEmbedding, ...]:
    """The h complex embeddings: t -> t0 * zeta_h^l, t0 the principal root of c."""
    key = (chi.field.q, bits)
    if key in _embedding_cache:
        return _embedding_cache[key]
    h = chi.h
    with numerics.working_precision(bits):
        if h == 1:
            out = (CharacterEmbedding(0, 1, mpc(1), bits),)
        else:
            cval = chi.c.embed(bits)
            t0 = gmpy2.exp(gmpy2.log(cval) / h)
            two_pi = 2 * gmpy2.const_pi()
            roots = []
            for l in range(h):
                zeta = gmpy2.exp(mpc(0, two_pi * l / h))
                roots.append(CharacterEmbedding(l, h, t0 * zeta, bits))
            out = tuple(roots)
    _embedding_cache[key] = out
    return out


def chi_quadratic(b: KIdeal, d: int) -> int:
    """Quadratic twist character value on an ideal: Jacobi(N(b) mod d | d).

    Valid for squarefree d ≡ 1 mod 4 with all prime factors inert in K (the
    twist-family conditions); callers validate family membership.
    """
    if d == 1:
        return 1
    n = b.norm() % d
    if math.gcd(n, d) != 1:
        raise NotCoprime(f"N(b) = {b.norm()} shares a factor with d = {d}")
    return jacobi(n, d)


def chi_quadratic_int(n: int, d: int) -> int:
    """Same character through the norm only."""
    if d == 1:
        return 1
    if math.gcd(n % d, d) != 1:
        raise NotCoprime(f"{n} shares a factor with {d}")
    return jacobi(n % d, d)


@dataclass(frozen=True)
class CoefficientSeries:
    """Dirichlet coefficients a_1..a_N of the conjugate character L-series."""

    q: int
    iota: int
    d: int
    R: int
    imprimitive: bool
    N: int
    a: tuple  # mpc entries, index n-1
    bits: int

    @property
    def conductor_norm(self) -> int:
        return self.d * self.d * self.q


class _IdealValueTable:
    """All integral ideals of norm <= N coprime to the conductor, with exact
    character values; grown on demand and shared by every series."""

    def __init__(self, chi: GrossCharacter):
        self.chi = chi
        self.bound = 0
        self.entries: list[tuple[int, CharValue]] = []

    def grow(self, bound: int):
        if bound <= self.bound:
            return
        chi = self.chi
        field = chi.field
        primes = [
            p for p in prime_ideal_list(field, bound) if p.norm() % field.q != 0
        ]
        prime_vals = [(p.norm(), chi.char_value(p)) for p in primes]
        one = CharValue(0, field.one())
        entries = [(1, one)]

        def rec(idx: int, norm: int, val: CharValue):
            for i in range(idx, len(prime_vals)):
                pn, pv = prime_vals[i]
                if norm * pn > bound:
                    break
                e_norm, e_val = norm * pn, chi.value_mul(val, pv)
                while e_norm <= bound:
                    entries.append((e_norm, e_val))
                    rec(i + 1, e_norm, e_val)
                    if e_norm * pn > bound:
                        break
                    e_norm, e_val = e_norm * pn, chi.value_mul(e_val, pv)

        rec(0, 1, one)
        entries.sort(key=lambda t: t[0])
        self.entries = entries
        self.bound = bound


_tables: dict[int, _IdealValueTable] = {}


def ideal_value_table(chi: GrossCharacter, bound: int) -> list[tuple[int, CharValue]]:
    table = _tables.setdefault(chi.field.q, _IdealValueTable(chi))
    table.grow(bound)
    return table.entries


def twisted_coefficients(
    chi: GrossCharacter,
    emb: CharacterEmbedding,
    R: int,
    d: int,
    N: int,
    imprimitive: bool = False,
) -> CoefficientSeries:
    """a_n = sum over ideals b of norm n, coprime to d*q (and to R when
    imprimitive), of conj(embedding of phi(b)) * chi_d(b)."""
    if R % d:
        raise ValueError("d must divide R")
    bits = emb.bits
    entries = ideal_value_table(chi, N)
    skip = d * chi.field.q * (R if imprimitive else 1)
    with numerics.working_precision(bits):
        zero = mpc(0)
        a = [zero] * N
        tpow = [mpc(1)]
        for _ in range(1, chi.h):
            tpow.append(tpow[-1] * emb.t)
        for n, v in entries:
            if n > N:
                break
            if math.gcd(n, skip) != 1:
                continue
            val = v.u.embed(bits) * tpow[v.j]
            a[n - 1] = a[n - 1] + val.conjugate() * chi_quadratic_int(n, d)
        return CoefficientSeries(
            chi.field.q, emb.iota, d, R, imprimitive, N, tuple(a), bits
        )

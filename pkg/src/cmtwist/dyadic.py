"""2-adic arithmetic and the K -> Q_2 embedding at the distinguished prime.

A DyadicNumber is 2^v * u with u odd, u known mod 2^prec. The embedding
convention fixes s = sqrt(-q) in Z_2 with s ≡ 1 mod 4; the completion
sending sqrt(-q) to s is the prime p of the paper-side convention
(equivalently ord((1 - sqrt(-q))/2) > 0 there), and p* is the other prime
above 2. The degree-one prime of T above p is realized as the Z_2-point
(s, t_P) with t_P the unique 2-adic root of x^h = c.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import NotASquare, PrecisionExhausted
from .hecke import GrossCharacter, build_character
from .quadfield import ImagQuadField, KElement, KIdeal

DEFAULT_DYADIC_PRECISION = 128


def v2(n: int) -> int:
    if n == 0:
        raise ValueError("v2(0) undefined")
    return (n & -n).bit_length() - 1


@dataclass(frozen=True)
class DyadicNumber:
    """2^v * u with odd u (mod 2^prec); zero is the exhausted bottom element."""

    v: int
    u: int
    prec: int
    is_zero: bool = False

    def __post_init__(self):
        if not self.is_zero:
            if self.prec <= 0 or self.u % 2 == 0:
                raise ValueError("unit must be odd with positive precision")

    @classmethod
    def zero(cls, abs_prec: int) -> "DyadicNumber":
        # zero to absolute precision: |x| <= 2^abs_prec is all that is known
        return cls(abs_prec, 1, 1, True)

    @classmethod
    def from_int(cls, n: int, prec: int = DEFAULT_DYADIC_PRECISION) -> "DyadicNumber":
        if n == 0:
            return cls.zero(prec)
        v = v2(n)
        return cls(v, (n >> v) % (1 << prec), prec)

    @classmethod
    def from_fraction(cls, x: Fraction, prec: int = DEFAULT_DYADIC_PRECISION) -> "DyadicNumber":
        if x == 0:
            return cls.zero(prec)
        num, den = x.numerator, x.denominator
        vn = v2(num) if num else 0
        vd = v2(den)
        un = abs(num) >> vn if num > 0 else -((-num) >> vn)
        ud = den >> vd
        mod = 1 << prec
        u = (un * pow(ud, -1, mod)) % mod
        return cls(vn - vd, u, prec)

    def ord(self) -> int:
        if self.is_zero:
            raise PrecisionExhausted(
                f"valuation not separated from error (only ord > {self.v} known)"
            )
        return self.v

    def unit(self) -> int:
        return self.u

    def abs_prec(self) -> int:
        # value is known modulo 2^abs_prec
        return self.v + (0 if self.is_zero else self.prec)

    def __add__(self, other: "DyadicNumber") -> "DyadicNumber":
        ap = min(self.abs_prec(), other.abs_prec())
        if self.is_zero and other.is_zero:
            return DyadicNumber.zero(ap)
        if self.is_zero:
            return other._truncate_abs(ap)
        if other.is_zero:
            return self._truncate_abs(ap)
        v = min(self.v, other.v)
        mod = 1 << max(ap - v, 1)
        s = ((self.u << (self.v - v)) + (other.u << (other.v - v))) % mod
        if s == 0:
            return DyadicNumber.zero(ap)
        dv = v2(s)
        if v + dv >= ap:
            return DyadicNumber.zero(ap)
        return DyadicNumber(v + dv, (s >> dv) % (1 << (ap - v - dv)), ap - v - dv)

    def _truncate_abs(self, ap: int) -> "DyadicNumber":
        if self.is_zero:
            return DyadicNumber.zero(min(self.v, ap))
        prec = ap - self.v
        if prec <= 0:
            return DyadicNumber.zero(ap)
        return DyadicNumber(self.v, self.u % (1 << prec), min(prec, self.prec))

    def __neg__(self) -> "DyadicNumber":
        if self.is_zero:
            return self
        return DyadicNumber(self.v, (-self.u) % (1 << self.prec), self.prec)

    def __sub__(self, other: "DyadicNumber") -> "DyadicNumber":
        return self + (-other)

    def __mul__(self, other: "DyadicNumber") -> "DyadicNumber":
        if self.is_zero or other.is_zero:
            # ord lower bounds add
            lo = (self.v if self.is_zero else self.v) + (
                other.v if other.is_zero else other.v
            )
            return DyadicNumber.zero(lo)
        prec = min(self.prec, other.prec)
        return DyadicNumber(self.v + other.v, (self.u * other.u) % (1 << prec), prec)

    def __truediv__(self, other: "DyadicNumber") -> "DyadicNumber":
        if other.is_zero:
            raise ZeroDivisionError("division by 2-adic zero")
        if self.is_zero:
            return DyadicNumber.zero(self.v - other.v)
        prec = min(self.prec, other.prec)
        mod = 1 << prec
        return DyadicNumber(
            self.v - other.v, (self.u * pow(other.u, -1, mod)) % mod, prec
        )

    def __pow__(self, e: int) -> "DyadicNumber":
        if e < 0:
            return DyadicNumber.from_int(1, self.prec) / self.__pow__(-e)
        out = DyadicNumber.from_int(1, self.prec)
        base = self
        while e:
            if e & 1:
                out = out * base
            e >>= 1
            if e:
                base = base * base
        return out

    def residue(self, k: int) -> int:
        """Value modulo 2^k (requires v >= 0 and enough precision)."""
        if self.is_zero:
            if self.v >= k:
                return 0
            raise PrecisionExhausted("zero not resolved to the requested modulus")
        if self.v < 0:
            raise ValueError("negative valuation has no residue")
        if self.abs_prec() < k:
            raise PrecisionExhausted("not enough 2-adic precision")
        return (self.u << self.v) % (1 << k)

    def __repr__(self):
        if self.is_zero:
            return f"O(2^{self.v})"
        return f"2^{self.v}*{self.u & 0xffff}... (prec {self.prec})"


def dyadic_sqrt(a: int, prec: int = DEFAULT_DYADIC_PRECISION) -> DyadicNumber:
    """Square root of a ≡ 1 mod 8 in Z_2, on the branch ≡ 1 mod 4."""
    if a % 8 != 1:
        raise NotASquare(f"{a} is not ≡ 1 mod 8")
    x = 1
    for k in range(3, prec + 1):
        # lift x with x^2 ≡ a mod 2^k to mod 2^(k+1)
        if (x * x - a) % (1 << (k + 1)):
            x += 1 << (k - 1)
    x %= 1 << prec
    if x % 4 != 1:
        x = (1 << prec) - x
    assert (x * x - a) % (1 << prec) == 0 and x % 4 == 1
    return DyadicNumber(0, x, prec)


def dyadic_nth_root(c: DyadicNumber, n: int) -> DyadicNumber:
    """The unique n-th root in Q_2 for odd n (x -> x^n is bijective on units)."""
    if n % 2 == 0 or n <= 0:
        raise ValueError("n must be odd and positive")
    if c.is_zero:
        raise ValueError("root of unresolved zero")
    if c.v % n:
        raise ValueError(f"valuation {c.v} not divisible by {n}")
    prec = c.prec
    x = 1
    for k in range(1, prec):
        # Hensel step: derivative n*x^(n-1) is odd, so each bit lifts uniquely
        mod = 1 << (k + 1)
        if (pow(x, n, mod) - c.u) % mod:
            x += 1 << k
    x %= 1 << prec
    assert (pow(x, n, 1 << prec) - c.u) % (1 << prec) == 0
    return DyadicNumber(c.v // n, x, prec)


@dataclass(frozen=True, eq=False)
class PadicEmbedding:
    """Evaluation data for T -> Q_2 at the degree-one prime above p."""

    field: ImagQuadField
    prec: int
    s: DyadicNumber  # sqrt(-q), ≡ 1 mod 4
    omega_img: DyadicNumber  # (1 + s)/2
    t_P: DyadicNumber  # unique 2-adic root of x^h = c

    def embed_K(self, x: KElement) -> DyadicNumber:
        a = DyadicNumber.from_fraction(x.a, self.prec)
        b = DyadicNumber.from_fraction(x.b, self.prec)
        return a + b * self.omega_img


def build_embedding(chi: GrossCharacter, prec: int = DEFAULT_DYADIC_PRECISION) -> PadicEmbedding:
    field = chi.field
    s = dyadic_sqrt(-field.q, prec + 8)
    two = DyadicNumber.from_int(2, prec + 8)
    omega_img = (DyadicNumber.from_int(1, prec + 8) + s) / two
    c_img = (
        DyadicNumber.from_fraction(chi.c.a, prec + 8)
        + DyadicNumber.from_fraction(chi.c.b, prec + 8) * omega_img
    )
    t_p = dyadic_nth_root(c_img, chi.h)
    return PadicEmbedding(field, prec, s, omega_img, t_p)


def embed_T_element(coeffs, emb: PadicEmbedding) -> DyadicNumber:
    """Evaluate sum kappa_j * t_P^j for K-coefficients kappa_j."""
    acc = DyadicNumber.zero(emb.prec)
    tp = DyadicNumber.from_int(1, emb.t_P.prec)
    for kappa in coeffs:
        if not kappa.is_zero():
            acc = acc + emb.embed_K(kappa) * tp
        tp = tp * emb.t_P
    return acc


def primes_above_two(field: ImagQuadField, emb: PadicEmbedding) -> tuple[KIdeal, KIdeal]:
    """(p, p*) where p is the prime cut out by the embedding convention."""
    cands = [KIdeal(field, 2, 0, 1), KIdeal(field, 2, 1, 1)]
    ords = []
    for ideal in cands:
        gen2 = field.element(ideal.m, 1)  # m + omega
        ords.append(emb.embed_K(gen2).ord())
    if ords[0] >= 1 and ords[1] == 0:
        return cands[0], cands[1]
    if ords[1] >= 1 and ords[0] == 0:
        return cands[1], cands[0]
    raise AssertionError("exactly one prime above 2 must absorb the embedding")


def inertia_check(q: int) -> str:
    """Whether p* is inert or split in the field cut out by the 2-division
    data: reduce X^2 + X + (alpha+1)/4 at p* and look for a root in F_2."""
    field = ImagQuadField(q)
    s = dyadic_sqrt(-q, 16)
    # at p* the image of alpha = sqrt(-q) is -s, so (alpha+1)/4 -> (1-s)/4
    c_star = ((1 - s.residue(5)) // 4) % 2
    # X^2 + X + c has a root in F_2 exactly when c = 0
    return "split" if c_star == 0 else "inert"


def char_unit_ord(chi: GrossCharacter, emb: PadicEmbedding) -> int:
    """ord at the degree-one prime of phi(p*) - 1."""
    _, p_star = primes_above_two(chi.field, emb)
    val = chi.char_value(p_star)
    img = emb.embed_K(val.u) * emb.t_P ** val.j
    one = DyadicNumber.from_int(1, emb.prec)
    return (img - one).ord()

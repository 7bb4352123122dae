"""Exact arithmetic in K = Q(sqrt(-q)) for prime q ≡ 7 mod 8.

Elements are written a + b*omega with omega = (1 + sqrt(-q))/2, so the ring
of integers is Z[omega] and omega^2 = omega - (1+q)/4. Integral ideals are
kept in Hermite normal form c*(Z*n + Z*(m + omega)); ideal classes are
realized through reduced binary quadratic forms of discriminant -q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import gmpy2
from gmpy2 import mpc

from . import numerics
from .errors import NonCyclicClassGroup, NotPrincipal


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


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a|n) for odd n > 0."""
    if n <= 0 or n % 2 == 0:
        raise ValueError("jacobi requires odd n > 0")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def sqrt_mod_prime(a: int, p: int) -> int:
    """Tonelli-Shanks square root of a modulo an odd prime p."""
    a %= p
    if a == 0:
        return 0
    if jacobi(a, p) != 1:
        raise ValueError(f"{a} is not a square mod {p}")
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    s, e = p - 1, 0
    while s % 2 == 0:
        s //= 2
        e += 1
    n = 2
    while jacobi(n, p) != -1:
        n += 1
    x = pow(a, (s + 1) // 2, p)
    b = pow(a, s, p)
    g = pow(n, s, p)
    r = e
    while True:
        t, m = b, 0
        while t != 1:
            t = t * t % p
            m += 1
        if m == 0:
            return x
        gs = pow(g, 1 << (r - m - 1), p)
        g = gs * gs % p
        x = x * gs % p
        b = b * g % p
        r = m


def round_half(t: Fraction) -> int:
    """Nearest integer to t (half rounds up)."""
    return math.floor(t + Fraction(1, 2))


@dataclass(frozen=True)
class ImagQuadField:
    """K = Q(sqrt(-q)), q prime ≡ 7 mod 8; discriminant -q, O_K = Z[omega]."""

    q: int

    def __post_init__(self):
        if not is_prime(self.q):
            raise ValueError(f"q = {self.q} is not prime")
        if self.q % 8 != 7:
            raise ValueError(f"q = {self.q} is not ≡ 7 mod 8")

    @property
    def discriminant(self) -> int:
        return -self.q

    @property
    def omega_norm(self) -> int:
        # N(omega) = (1+q)/4
        return (1 + self.q) // 4

    def element(self, a, b=0) -> "KElement":
        return KElement(self, Fraction(a), Fraction(b))

    def sqrt_minus_q(self) -> "KElement":
        # sqrt(-q) = 2*omega - 1
        return KElement(self, Fraction(-1), Fraction(2))

    def one(self) -> "KElement":
        return KElement(self, Fraction(1), Fraction(0))

    def maximal_order(self) -> "KIdeal":
        return KIdeal(self, 1, 0, 1)

    def embed_omega(self, bits: int) -> mpc:
        """Image of omega under the fixed embedding sqrt(-q) -> +i*sqrt(q)."""
        with numerics.working_precision(bits):
            return (1 + gmpy2.sqrt(mpc(-self.q))) / 2


@dataclass(frozen=True)
class KElement:
    """a + b*omega with rational a, b."""

    field: ImagQuadField
    a: Fraction
    b: Fraction

    def __add__(self, other: "KElement") -> "KElement":
        return KElement(self.field, self.a + other.a, self.b + other.b)

    def __sub__(self, other: "KElement") -> "KElement":
        return KElement(self.field, self.a - other.a, self.b - other.b)

    def __neg__(self) -> "KElement":
        return KElement(self.field, -self.a, -self.b)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return KElement(self.field, self.a * other, self.b * other)
        # omega^2 = omega - (1+q)/4
        w2 = Fraction(1 + self.field.q, 4)
        a1, b1, a2, b2 = self.a, self.b, other.a, other.b
        return KElement(
            self.field,
            a1 * a2 - b1 * b2 * w2,
            a1 * b2 + a2 * b1 + b1 * b2,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return KElement(self.field, self.a / other, self.b / other)
        n = other.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in K")
        return (self * other.conj()) / n

    def conj(self) -> "KElement":
        # conj(omega) = 1 - omega
        return KElement(self.field, self.a + self.b, -self.b)

    def norm(self) -> Fraction:
        return (
            self.a * self.a
            + self.a * self.b
            + self.b * self.b * Fraction(1 + self.field.q, 4)
        )

    def trace(self) -> Fraction:
        return 2 * self.a + self.b

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_integral(self) -> bool:
        return self.a.denominator == 1 and self.b.denominator == 1

    def embed(self, bits: int) -> mpc:
        with numerics.working_precision(bits):
            wa = numerics.to_real(self.a, bits)
            wb = numerics.to_real(self.b, bits)
            return wa + wb * self.field.embed_omega(bits)

    def __repr__(self):
        return f"({self.a} + {self.b}*w)"


def _hnf_from_rows(rows: list[list[int]]) -> tuple[int, int, int]:
    """HNF (content c, n, m) of the Z-module spanned by rows (u, v) = u + v*omega.

    The input must already be closed under multiplication by omega (the ideal
    constructors guarantee this by appending omega-multiples).
    """
    rows = [list(r) for r in rows if r != (0, 0) and list(r) != [0, 0]]
    if not rows:
        raise ValueError("zero module has no HNF")
    pivot = None
    for r in rows:
        if r[1] != 0:
            pivot = r
            break
    if pivot is None:
        raise ValueError("rank-1 module is not an ideal")
    for r in rows:
        if r is pivot or r[1] == 0:
            continue
        while r[1] != 0:
            if abs(pivot[1]) > abs(r[1]):
                pivot[0], r[0] = r[0], pivot[0]
                pivot[1], r[1] = r[1], pivot[1]
            t = r[1] // pivot[1]
            r[0] -= t * pivot[0]
            r[1] -= t * pivot[1]
    if pivot[1] < 0:
        pivot[0], pivot[1] = -pivot[0], -pivot[1]
    c = pivot[1]
    n_gcd = 0
    for r in rows:
        if r is not pivot:
            n_gcd = math.gcd(n_gcd, abs(r[0]))
    if n_gcd == 0:
        raise ValueError("rank-1 module is not an ideal")
    # ideal stability under omega forces c | n and c | u-part of the pivot
    if n_gcd % c or pivot[0] % c:
        raise ValueError("module is not an O_K-ideal")
    n = n_gcd // c
    m = (pivot[0] // c) % n
    return c, n, m


@dataclass(frozen=True)
class KIdeal:
    """Integral ideal c*(Z*n + Z*(m + omega)) in HNF; norm c^2 * n."""

    field: ImagQuadField
    n: int
    m: int
    c: int = 1

    def __post_init__(self):
        if self.c <= 0 or self.n <= 0 or not 0 <= self.m < self.n:
            raise ValueError("invalid HNF triple")
        nm = self.m * self.m + self.m + self.field.omega_norm
        if nm % self.n:
            raise ValueError(f"n = {self.n} does not divide N(m + omega) = {nm}")

    @classmethod
    def from_generators(cls, field: ImagQuadField, gens: list[KElement]) -> "KIdeal":
        rows: list[list[int]] = []
        w2 = field.omega_norm
        for g in gens:
            if not g.is_integral():
                raise ValueError("generators must be integral")
            u, v = int(g.a), int(g.b)
            rows.append([u, v])
            # omega * (u + v*omega) = -v*(1+q)/4 + (u+v)*omega
            rows.append([-v * w2, u + v])
        c, n, m = _hnf_from_rows(rows)
        return cls(field, n, m, c)

    @classmethod
    def principal(cls, alpha: KElement) -> "KIdeal":
        if alpha.is_zero():
            raise ValueError("zero ideal")
        return cls.from_generators(alpha.field, [alpha])

    def norm(self) -> int:
        return self.c * self.c * self.n

    def basis(self) -> tuple[KElement, KElement]:
        f = self.field
        return (
            KElement(f, Fraction(self.c * self.n), Fraction(0)),
            KElement(f, Fraction(self.c * self.m), Fraction(self.c)),
        )

    def conj(self) -> "KIdeal":
        # conj(m + omega) = (m + 1) - omega, so the conjugate HNF slot is -(m+1) mod n
        return KIdeal(self.field, self.n, (-self.m - 1) % self.n, self.c)

    def __mul__(self, other: "KIdeal") -> "KIdeal":
        b1 = self.basis()
        b2 = other.basis()
        gens = [x * y for x in b1 for y in b2]
        return KIdeal.from_generators(self.field, gens)

    def __pow__(self, e: int) -> "KIdeal":
        if e < 0:
            raise ValueError("integral ideals only")
        result = self.field.maximal_order()
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def contains(self, x: KElement) -> bool:
        if not x.is_integral():
            return False
        u, v = int(x.a), int(x.b)
        if v % self.c:
            return False
        t = v // self.c
        rem = u - self.c * self.m * t
        return rem % (self.c * self.n) == 0

    def primitive_part(self) -> "KIdeal":
        return KIdeal(self.field, self.n, self.m, 1)

    def is_coprime_to(self, k: int) -> bool:
        return math.gcd(self.norm(), k) == 1

    def __repr__(self):
        return f"[{self.c}*({self.n}, {self.m}+w)]"


def _bilinear(x: KElement, y: KElement) -> Fraction:
    # polarization of the norm form: B(x, y) = (N(x+y) - N(x) - N(y)) / 2
    return (
        x.a * y.a
        + Fraction(x.a * y.b + x.b * y.a, 2)
        + x.b * y.b * Fraction(1 + x.field.q, 4)
    )


def shortest_vector(ideal: KIdeal) -> KElement:
    """Gauss-reduced shortest nonzero vector of the ideal lattice."""
    u, v = ideal.basis()
    if u.norm() > v.norm():
        u, v = v, u
    while True:
        k = round_half(_bilinear(u, v) / u.norm())
        v = v - k * u
        if v.norm() < u.norm():
            u, v = v, u
        else:
            return u


def canonical_sign(x: KElement) -> KElement:
    """The representative of {x, -x} whose first nonzero coordinate is positive."""
    if x.a != 0:
        return x if x.a > 0 else -x
    return x if x.b >= 0 else -x


def principal_generator(ideal: KIdeal) -> KElement:
    """Generator of a principal ideal, canonical up to the unit group {±1}.

    The shortest vector beta of the ideal lattice satisfies N(beta) >= N(ideal)
    with equality exactly when the ideal is (beta); since the unit group is
    {±1} this test is complete.
    """
    beta = shortest_vector(ideal)
    if beta.norm() != ideal.norm():
        raise NotPrincipal(f"{ideal} has no generator")
    return canonical_sign(beta)


@dataclass(frozen=True)
class QuadForm:
    """Binary quadratic form (A, B, C) of discriminant -q."""

    A: int
    B: int
    C: int

    def discriminant(self) -> int:
        return self.B * self.B - 4 * self.A * self.C

    def is_reduced(self) -> bool:
        A, B, C = self.A, self.B, self.C
        if not (abs(B) <= A <= C):
            return False
        if (abs(B) == A or A == C) and B < 0:
            return False
        return True

    def reduce(self) -> "QuadForm":
        A, B, C = self.A, self.B, self.C
        D = self.discriminant()
        while True:
            b = (B + A) % (2 * A) - A
            if b == -A:
                b = A
            B = b
            C = (B * B - D) // (4 * A)
            if C < A:
                A, B, C = C, -B, A
                continue
            if (A == C or A == B) and B < 0:
                B = -B
            return QuadForm(A, B, C)


def reduced_forms(field: ImagQuadField) -> list[QuadForm]:
    """All reduced primitive forms of discriminant -q, lexicographic order."""
    q = field.q
    forms = []
    amax = math.isqrt(q // 3)
    for A in range(1, amax + 1):
        for B in range(-A + 1, A + 1):
            if (B * B + q) % (4 * A):
                continue
            C = (B * B + q) // (4 * A)
            f = QuadForm(A, B, C)
            if f.is_reduced():
                forms.append(f)
    return sorted(forms, key=lambda f: (f.A, f.B, f.C))


def form_to_ideal(field: ImagQuadField, f: QuadForm) -> KIdeal:
    # m = (B-1)/2 mod A makes the associated form of the ideal equal to f itself
    m = ((f.B - 1) // 2) % f.A
    return KIdeal(field, f.A, m, 1)


def ideal_to_form(ideal: KIdeal) -> QuadForm:
    p = ideal.primitive_part()
    nm = p.m * p.m + p.m + ideal.field.omega_norm
    return QuadForm(p.n, 2 * p.m + 1, nm // p.n).reduce()


@dataclass(frozen=True)
class ClassGroup:
    """Ideal class group data: order h, reduced forms, a cyclic generator."""

    field: ImagQuadField
    h: int
    forms: tuple[QuadForm, ...]
    generator_ideal: KIdeal
    dlog: dict  # reduced form tuple -> exponent of the generator class

    def exponent_of(self, form: QuadForm) -> int:
        return self.dlog[(form.A, form.B, form.C)]


def _class_order(field: ImagQuadField, ideal: KIdeal, h: int) -> int:
    principal = ideal_to_form(field.maximal_order())
    acc = ideal
    for e in range(1, h + 1):
        if ideal_to_form(acc) == principal:
            return e
        acc = acc * ideal
    raise AssertionError("class order exceeds h")


@lru_cache(maxsize=None)
def class_group(field: ImagQuadField) -> ClassGroup:
    """Enumerate reduced forms, count h, and fix a deterministic generator.

    The generator is the smallest integral ideal (ordered by (norm, n, m))
    whose class has order h; failure to find one is exactly non-cyclicity.
    """
    forms = tuple(reduced_forms(field))
    h = len(forms)
    principal_form = ideal_to_form(field.maximal_order())
    if h == 1:
        gen = field.maximal_order()
        dlog = {(principal_form.A, principal_form.B, principal_form.C): 0}
        return ClassGroup(field, 1, forms, gen, dlog)
    candidates = sorted(
        (form_to_ideal(field, f) for f in forms if f != principal_form),
        key=lambda ideal: (ideal.norm(), ideal.n, ideal.m),
    )
    gen = None
    for ideal in candidates:
        if _class_order(field, ideal, h) == h:
            gen = ideal
            break
    if gen is None:
        raise NonCyclicClassGroup(f"class group of q={field.q} has no generator")
    dlog = {}
    acc = field.maximal_order()
    for e in range(h):
        f = ideal_to_form(acc)
        dlog[(f.A, f.B, f.C)] = e
        acc = acc * gen
    if len(dlog) != h:
        raise NonCyclicClassGroup("generator powers do not exhaust the classes")
    return ClassGroup(field, h, forms, gen, dlog)


def reduce_to_class(ideal: KIdeal, G: ClassGroup) -> int:
    """Exponent j with [ideal] = [generator]^j."""
    return G.exponent_of(ideal_to_form(ideal))


def primes_above(field: ImagQuadField, ell: int) -> list[tuple[KIdeal, int]]:
    """Prime ideals of O_K over the rational prime ell, as (ideal, residue degree).

    Entries are repeated per multiplicity, so the product of all returned
    ideals is exactly (ell): split -> [p, p*], inert -> [(ell)], ramified
    (ell = q) -> [q-ideal, q-ideal].
    """
    if not is_prime(ell):
        raise ValueError(f"{ell} is not prime")
    q = field.q
    if ell == q:
        frak_q = KIdeal(field, q, (q - 1) // 2, 1)
        return [(frak_q, 1), (frak_q, 1)]
    if ell == 2:
        # q ≡ 7 mod 8 makes -q ≡ 1 mod 8, so 2 always splits
        return [(KIdeal(field, 2, 0, 1), 1), (KIdeal(field, 2, 1, 1), 1)]
    symbol = jacobi(-q % ell, ell)
    if symbol == -1:
        return [(KIdeal(field, 1, 0, ell), 2)]
    # split: roots of x^2 + x + (1+q)/4 mod ell, from y with y^2 = -q
    y = sqrt_mod_prime(-q % ell, ell)
    m1 = ((y - 1) * pow(2, -1, ell)) % ell
    m2 = (ell - 1 - m1) % ell
    return [
        (KIdeal(field, ell, min(m1, m2), 1), 1),
        (KIdeal(field, ell, max(m1, m2), 1), 1),
    ]


def prime_ideal_list(field: ImagQuadField, bound: int) -> list[KIdeal]:
    """All prime ideals of norm <= bound, sorted by (norm, m)."""
    seen = set()
    out = []
    for ell in range(2, bound + 1):
        if not is_prime(ell):
            continue
        for ideal, _ in primes_above(field, ell):
            key = (ideal.n, ideal.m, ideal.c)
            if ideal.norm() <= bound and key not in seen:
                seen.add(key)
                out.append(ideal)
    return sorted(out, key=lambda I: (I.norm(), I.m))


def ideals_of_norm_up_to(field: ImagQuadField, bound: int):
    """Yield (norm, ideal) for every integral ideal of norm <= bound.

    Built multiplicatively from prime ideals; each ideal appears exactly once.
    Depth-first order, not sorted by norm.
    """
    if bound < 1:
        raise ValueError("bound must be >= 1")
    primes = prime_ideal_list(field, bound)

    def rec(idx: int, norm: int, ideal: KIdeal):
        for i in range(idx, len(primes)):
            p = primes[i]
            pn = p.norm()
            if norm * pn > bound:
                break  # primes are norm-sorted: later ones only bigger
            e_norm, e_ideal = norm * pn, ideal * p
            while e_norm <= bound:
                yield e_norm, e_ideal
                yield from rec(i + 1, e_norm, e_ideal)
                if e_norm * pn > bound:
                    break
                e_norm, e_ideal = e_norm * pn, e_ideal * p

    yield 1, field.maximal_order()
    yield from rec(0, 1, field.maximal_order())


def count_ideals_by_forms(field: ImagQuadField, bound: int) -> int:
    """Independent ideal count: half the number of representations of
    1..bound by the reduced forms (each ideal corresponds to exactly two
    representations because the unit group is {±1})."""
    q = field.q
    total = 0
    for f in reduced_forms(field):
        A, B, C = f.A, f.B, f.C
        ymax = math.isqrt(4 * A * bound // q) + 2
        for y in range(-ymax, ymax + 1):
            disc = B * B * y * y - 4 * A * (C * y * y - bound)
            if disc < 0:
                continue
            r = math.isqrt(disc)
            xlo = (-B * y - r) // (2 * A) - 1
            xhi = (-B * y + r) // (2 * A) + 1
            for x in range(xlo, xhi + 1):
                val = A * x * x + B * x * y + C * y * y
                if 0 < val <= bound:
                    total += 1
    return total // 2

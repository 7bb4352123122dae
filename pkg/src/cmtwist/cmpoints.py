"""Partial L-values through Eisenstein series at CM division points.

The trace over Gal(K(R*q-ideal)/H) is realized as a sum over principal-ray
representatives beta of (O_K / R*sqrt(-q))^x / {±1}; the Galois action moves
the division point z = xi*Omega/(R*sqrt(-qd)) to phi_d((beta)) * z. Scale
convention: Omega = 1, xi(a) = 1, xi_d(a) = 1/chi_d(a) and the class-j
lattice is a_j^(-1) embedded in C — homogeneity of the weight-1 series makes
every implemented quantity independent of this normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import gmpy2
from gmpy2 import mpc, mpfr

from . import numerics
from .errors import NotInFamily
from .eisenstein import EisensteinCtx, Lattice, e1star, quasi_periods
from .hecke import GrossCharacter, CharacterEmbedding, chi_quadratic, embed_value
from .numerics import PrecisionPolicy
from .quadfield import (
    ImagQuadField,
    KElement,
    KIdeal,
    class_group,
    ideals_of_norm_up_to,
    jacobi,
    reduce_to_class,
)


def factor_family(field: ImagQuadField, R: int) -> tuple[int, ...]:
    """Prime factors of R, validated against the twist-family conditions."""
    if R < 1:
        raise NotInFamily(f"R = {R} is not positive")
    rest = R
    factors = []
    p = 2
    while p * p <= rest:
        if rest % p == 0:
            factors.append(p)
            rest //= p
            if rest % p == 0:
                raise NotInFamily(f"R = {R} is not squarefree (p = {p})")
        p += 1
    if rest > 1:
        factors.append(rest)
    for r in factors:
        if r % 4 != 1:
            raise NotInFamily(f"prime {r} is not ≡ 1 mod 4")
        if jacobi(-field.q % r, r) != -1:
            raise NotInFamily(f"prime {r} is not inert in K (q = {field.q})")
    return tuple(factors)


@dataclass(frozen=True, eq=False)
class RayReps:
    """Representatives beta of (O_K/R*sqrt(-q))^x / {±1}, one per class."""

    field: ImagQuadField
    R: int
    constraint: str
    reps: tuple[KElement, ...]


@lru_cache(maxsize=None)
def ray_representatives(field: ImagQuadField, R: int, constraint: str = "none") -> RayReps:
    """CRT enumeration over O_K/sqrt(-q) ≅ F_q and O_K/r ≅ F_{r^2}.

    constraint "fix_HR" keeps the classes whose Artin symbols fix every
    sqrt(r_i): Jacobi(N(beta) | r_i) = +1 for all i.
    """
    if constraint not in ("none", "fix_HR"):
        raise ValueError("constraint must be 'none' or 'fix_HR'")
    q = field.q
    factors = factor_family(field, R)
    # residue systems: u in (Z/q)^x for the ramified part; (a, b) != (0, 0)
    # coordinate pairs mod r for each inert r
    r_units: list[list[tuple[int, int]]] = []
    for r in factors:
        r_units.append([(a, b) for a in range(r) for b in range(r) if (a, b) != (0, 0)])

    half = (q + 1) // 2  # omega maps to (q+1)/2 in O_K/sqrt(-q) ≅ Z/q

    def crt(residues: list[int], moduli: list[int]) -> int:
        M = 1
        for m in moduli:
            M *= m
        x = 0
        for r, m in zip(residues, moduli):
            if m == 1:
                continue
            Mi = M // m
            x = (x + r * Mi * pow(Mi % m, -1, m)) % M
        return x

    def reduce_pair(x: int, y: int) -> tuple[int, int]:
        # canonical coordinates modulo the lattice R*sqrt(-q)*O_K, whose HNF
        # Z-basis is (R*q, 0) and R*(-(1+q)/2 + omega)
        y_red = y % R
        k = (y - y_red) // R
        x_red = (x + k * R * (1 + q) // 2) % (R * q)
        return x_red, y_red

    seen = set()
    reps = []
    combos = [[]]
    for units in r_units:
        combos = [prev + [u] for prev in combos for u in units]
    for q_res in range(1, q):
        for r_res in combos:
            y = crt([b for _, b in r_res], list(factors))
            x_mod_r = crt([a for a, _ in r_res], list(factors))
            x_mod_q = (q_res - y * half) % q
            x = crt([x_mod_r, x_mod_q], [R, q])
            key = min(reduce_pair(x, y), reduce_pair(-x, -y))
            if key in seen:
                continue
            seen.add(key)
            reps.append(field.element(key[0], key[1]))
    if constraint == "fix_HR":
        kept = []
        for beta in reps:
            nb = int(beta.norm())
            if all(jacobi(nb % r, r) == 1 for r in factors):
                kept.append(beta)
        reps = kept
    return RayReps(field, R, constraint, tuple(reps))


@lru_cache(maxsize=None)
def class_representative(field: ImagQuadField, j: int, coprime_to: int) -> KIdeal:
    """Smallest-norm integral ideal of class exponent j coprime to the modulus."""
    G = class_group(field)
    if j == 0:
        return field.maximal_order()
    for n, ideal in sorted(ideals_of_norm_up_to(field, 60 * field.q), key=lambda t: t[0]):
        if math.gcd(n, coprime_to) != 1:
            continue
        if reduce_to_class(ideal, G) == j % G.h:
            return ideal
    raise AssertionError("no class representative found at desk scale")


def ideal_inverse_lattice(ideal: KIdeal, bits: int, scale: mpc | None = None) -> Lattice:
    """The fractional ideal a^(-1) = conj(a)/N(a) as a complex lattice."""
    with numerics.working_precision(bits):
        n_ideal = ideal.norm()
        cj = ideal.conj()
        b1, b2 = cj.basis()
        w1 = b1.embed(bits) / n_ideal
        w2 = b2.embed(bits) / n_ideal
        if scale is not None:
            w1 = w1 * scale
            w2 = w2 * scale
        return Lattice.build(w1, w2, bits)


@dataclass(frozen=True, eq=False)
class _ClassContext:
    ideal: KIdeal
    lattice: Lattice
    ctx: EisensteinCtx


_class_ctx_cache: dict[tuple, _ClassContext] = {}


def _class_context(field: ImagQuadField, j: int, R: int, d: int, bits: int) -> _ClassContext:
    key = (field.q, j, R, d, bits)
    if key not in _class_ctx_cache:
        ideal = class_representative(field, j, 2 * R * field.q)
        with numerics.working_precision(bits):
            scale = 1 / gmpy2.sqrt(mpfr(d)) if d > 1 else None
            lat = ideal_inverse_lattice(ideal, bits, scale)
        _class_ctx_cache[key] = _ClassContext(ideal, lat, quasi_periods(lat))
    return _class_ctx_cache[key]


_division_sum_cache: dict[tuple, tuple[mpc, int]] = {}


def _division_point_sum(
    chi: GrossCharacter,
    d: int,
    R: int,
    class_j: int,
    bits: int,
    constraint: str = "none",
) -> tuple[mpc, _ClassContext, int]:
    """sum over representatives of E1*(phi_d((beta)) * chi_d(a)/(R sqrt(-qd)), L_j/sqrt(d)).

    Returns (sum, class context, chi_d(a)). Embedding-independent: phi_d on
    principal ideals takes values in K.
    """
    field = chi.field
    cc = _class_context(field, class_j, R, d, bits)
    key = (field.q, d, R, class_j, bits, constraint)
    if key in _division_sum_cache:
        total, chi_d_a = _division_sum_cache[key]
        return total, cc, chi_d_a
    chi_d_a = chi_quadratic(cc.ideal, d)
    reps = ray_representatives(field, R, constraint)
    with numerics.working_precision(bits):
        root = gmpy2.sqrt(mpc(-field.q * d))  # +i*sqrt(qd)
        kappa = mpc(chi_d_a) / (R * root)
        total = mpc(0)
        for beta in reps.reps:
            sign = chi.eps(beta)
            if d > 1:
                sign *= jacobi(int(beta.norm()) % d, d)
            z = sign * beta.embed(bits) * kappa
            total += e1star(z, cc.lattice, cc.ctx)
    _division_sum_cache[key] = (total, chi_d_a)
    return total, cc, chi_d_a


def partial_l_eisenstein(
    chi: GrossCharacter,
    emb: CharacterEmbedding,
    d: int,
    R: int,
    class_j: int,
    policy: PrecisionPolicy = PrecisionPolicy(),
) -> mpc:
    """L_R(conj phi_d, gamma_j, 1) under the unit-scale convention (so the
    value is directly the partial L-value, no period division)."""
    if R % d:
        raise ValueError("d must divide R")
    field = chi.field
    factor_family(field, R)
    bits = policy.work_bits
    total, cc, chi_d_a = _division_point_sum(chi, d, R, class_j, bits)
    with numerics.working_precision(bits):
        phi_a = embed_value(emb, chi.char_value(cc.ideal)) * chi_d_a
        root = gmpy2.sqrt(mpc(-field.q * d))
        return total * chi_d_a / (phi_a * R * root)


def psi_sum(
    chi: GrossCharacter,
    R: int,
    class_j: int,
    policy: PrecisionPolicy = PrecisionPolicy(),
) -> mpc:
    """Trace to H_R of E1* at the basic division point, divided by R*sqrt(-q).

    Unit-scale convention: the true trace value is this divided by
    xi(a)*Omega (homogeneity); only scale-free combinations are consumed.
    """
    field = chi.field
    factors = factor_family(field, R)
    if not factors:
        raise NotInFamily("Psi is defined for R in the family with R > 1")
    bits = policy.work_bits
    total, _, _ = _division_point_sum(chi, 1, R, class_j, bits, constraint="fix_HR")
    with numerics.working_precision(bits):
        root = gmpy2.sqrt(mpc(-field.q))
        return total / (R * root)

"""CM curve models, Hilbert class polynomials, and AGM period lattices.

Period pairs from the complex AGM are certified, not trusted: the lattice is
accepted only when its own g2, g3 (recomputed through Eisenstein series at
the reduced period ratio) reproduce the model's invariants. The homothety
fit to c*O_K then extracts the fundamental period up to sign.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from . import numerics
from .errors import NotHomotheticToOK, PrecisionLoss, RoundingMarginExceeded, UnsupportedQ
from .eisenstein import Lattice
from .numerics import PrecisionPolicy, complex_agm
from .quadfield import ImagQuadField, reduced_forms


@dataclass(frozen=True, eq=False)
class CurveModel:
    """Long Weierstrass coefficients under one fixed complex embedding."""

    a1: mpc
    a2: mpc
    a3: mpc
    a4: mpc
    a6: mpc
    tag: str  # "mg" | "builtin-minimal" | "user-supplied"
    scale_caveat: bool = False  # period scale may differ from the Neron scale

    def b_invariants(self):
        b2 = self.a1 * self.a1 + 4 * self.a2
        b4 = 2 * self.a4 + self.a1 * self.a3
        b6 = self.a3 * self.a3 + 4 * self.a6
        b8 = (
            self.a1 * self.a1 * self.a6
            + 4 * self.a2 * self.a6
            - self.a1 * self.a3 * self.a4
            + self.a2 * self.a3 * self.a3
            - self.a4 * self.a4
        )
        return b2, b4, b6, b8

    def c_invariants(self):
        b2, b4, b6, _ = self.b_invariants()
        c4 = b2 * b2 - 24 * b4
        c6 = -b2 * b2 * b2 + 36 * b2 * b4 - 216 * b6
        return c4, c6

    def discriminant(self) -> mpc:
        b2, b4, b6, b8 = self.b_invariants()
        return (
            -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
        )

    def j_invariant(self) -> mpc:
        c4, _ = self.c_invariants()
        disc = self.discriminant()
        return c4 * c4 * c4 / disc

    def scaled(self, u) -> "CurveModel":
        """The model after (x, y) -> (u^2 x, u^3 y); periods scale by 1/u."""
        return CurveModel(
            self.a1 * u,
            self.a2 * u * u,
            self.a3 * u ** 3,
            self.a4 * u ** 4,
            self.a6 * u ** 6,
            "user-supplied",
            self.scale_caveat,
        )


@dataclass(frozen=True, eq=False)
class PeriodLatticeResult:
    lattice: Lattice
    omega: mpc  # lattice = omega * O_K, unique up to sign
    residual: mpfr


def _eisenstein_weight(tau: mpc, weight: int, bits: int) -> mpc:
    """Normalized E4 or E6 at tau via sigma-power q-series."""
    with numerics.working_precision(bits + 16):
        qn = gmpy2.exp(mpc(0, 2 * gmpy2.const_pi()) * tau)
        coeff = {4: 240, 6: -504}[weight]
        tol = mpfr(2) ** (-(bits + 8))
        acc = mpc(0)
        qq = mpc(1)
        for n in range(1, 100000):
            qq = qq * qn
            term = n ** (weight - 1) * qq / (1 - qq)
            acc += term
            if abs(term) < tol * (1 + abs(acc)):
                break
        else:
            raise PrecisionLoss("Eisenstein series did not converge")
        return 1 + coeff * acc


def lattice_invariants(L: Lattice, bits: int) -> tuple[mpc, mpc]:
    """(g2, g3) of the lattice from E4, E6 at the reduced ratio."""
    with numerics.working_precision(bits + 16):
        e4 = _eisenstein_weight(L.tau, 4, bits)
        e6 = _eisenstein_weight(L.tau, 6, bits)
        two_pi = 2 * gmpy2.const_pi()
        g2 = (two_pi / L.r1) ** 4 * e4 / 12
        g3 = (two_pi / L.r1) ** 6 * e6 / 216
        return g2, g3


def j_from_tau(tau: mpc, bits: int) -> mpc:
    """Modular j from E4 and the eta-product discriminant (numerically)."""
    with numerics.working_precision(bits + 32):
        e4 = _eisenstein_weight(tau, 4, bits + 16)
        qn = gmpy2.exp(mpc(0, 2 * gmpy2.const_pi()) * tau)
        eta24 = mpc(1)
        qq = mpc(1)
        tol = mpfr(2) ** (-(bits + 24))
        for n in range(1, 100000):
            qq = qq * qn
            eta24 = eta24 * (1 - qq) ** 24
            if abs(qq) < tol:
                break
        delta = qn * eta24
        return e4 ** 3 / delta


def hilbert_class_polynomial(q: int, policy: PrecisionPolicy = PrecisionPolicy()) -> list[int]:
    """Integer coefficients (ascending) of prod (x - j(a)) over the h classes.

    j is evaluated at each reduced-form CM point; symmetric functions are
    rounded to integers with an explicit margin and re-verified against the
    roots.
    """
    field = ImagQuadField(q)
    bits = policy.work_bits
    with numerics.working_precision(bits + 32):
        roots = []
        for f in reduced_forms(field):
            tau = (-f.B + gmpy2.sqrt(mpc(-q))) / (2 * f.A)
            roots.append(j_from_tau(tau, bits))
        coeffs = [mpc(1)]
        for r in roots:
            nxt = [mpc(0)] * (len(coeffs) + 1)
            for i, cf in enumerate(coeffs):
                nxt[i + 1] += cf
                nxt[i] -= cf * r
            coeffs = nxt
        out = []
        margin = mpfr(2) ** (-policy.guard_bits)
        for cf in coeffs:
            n = int(gmpy2.rint(cf.real))
            err = abs(cf - n)
            scale = max(mpfr(1), abs(cf))
            if err > margin * scale:
                raise RoundingMarginExceeded(
                    f"coefficient {complex(cf)} is {float(err):.2e} from an integer"
                )
            out.append(n)
        # verify: every CM j-value is a root of the rounded polynomial
        for r in roots:
            val = sum(c * r ** i for i, c in enumerate(out))
            dsc = max(mpfr(1), abs(r)) ** (len(out) - 1)
            if abs(val) > mpfr(2) ** (-(bits // 2)) * dsc:
                raise RoundingMarginExceeded("rounded polynomial rejects a CM root")
        return out


def principal_j_value(q: int, bits: int) -> mpfr:
    """j of the principal class (real for the principal CM point)."""
    with numerics.working_precision(bits + 32):
        tau = (1 + gmpy2.sqrt(mpc(-q))) / 2
        j = j_from_tau(tau, bits)
        return j.real


def gross_model_real(q: int, policy: PrecisionPolicy = PrecisionPolicy()) -> CurveModel:
    """y^2 = x^3 + 2^-4 3^-1 m q x - 2^-5 3^-3 r q^2 at the real embedding,
    with m the real cube root of j and r = +sqrt((1728 - j)/q).

    Carries the scale caveat: the differential may be a unit multiple of the
    Neron one, so flagged models are excluded from absolute checks.
    """
    bits = policy.work_bits
    with numerics.working_precision(bits + 16):
        j = principal_j_value(q, bits)
        m = gmpy2.sign(j) * abs(j) ** (mpfr(1) / 3)
        r2 = (1728 - j) / q
        if r2 <= 0:
            raise PrecisionLoss("(1728 - j)/q must be positive")
        r = gmpy2.sqrt(r2)
        a4 = m * q / mpfr(48)
        a6 = -r * q * q / mpfr(864)
        zero = mpc(0)
        return CurveModel(zero, zero, zero, mpc(a4), mpc(a6), "mg", scale_caveat=True)


_BUILTIN_Q7 = (1, -1, 0, -2, -1)  # conductor-49 CM curve (a1, a2, a3, a4, a6)


def builtin_minimal_model(q: int, policy: PrecisionPolicy = PrecisionPolicy()) -> CurveModel:
    """Global minimal models pinned for q = 7 and q = 23.

    q = 23: coefficients in Z[alpha] with alpha the real root of
    x^3 - x - 1 (the class-field cubic), embedded at the real place.
    """
    bits = policy.work_bits
    with numerics.working_precision(bits + 16):
        if q == 7:
            a1, a2, a3, a4, a6 = (mpc(v) for v in _BUILTIN_Q7)
            return CurveModel(a1, a2, a3, a4, a6, "builtin-minimal")
        if q == 23:
            alpha = mpfr(4) / 3
            for _ in range(200):
                alpha = alpha - (alpha ** 3 - alpha - 1) / (3 * alpha ** 2 - 1)
            a = alpha
            a1 = mpc(a ** 3)
            a3 = mpc(a + 2)
            a2 = mpc(2)
            a4 = mpc(-(12 * a ** 2 + 27 * a + 16))
            a6 = mpc(-(73 * a ** 2 + 99 * a + 62))
            return CurveModel(a1, a2, a3, a4, a6, "builtin-minimal")
    raise UnsupportedQ(f"no builtin minimal model for q = {q}")


def _cubic_roots(g2: mpc, g3: mpc, bits: int) -> list[mpc]:
    """Roots of 4x^3 - g2 x - g3: float seed, Newton refinement."""
    with numerics.working_precision(bits + 16):
        seeds = np.roots([4.0, 0.0, -complex(g2), -complex(g3)])
        roots = []
        for s in seeds:
            x = mpc(complex(s))
            for _ in range(bits.bit_length() + 30):
                fx = 4 * x ** 3 - g2 * x - g3
                dfx = 12 * x ** 2 - g2
                step = fx / dfx
                x = x - step
                if abs(step) < mpfr(2) ** (-(bits + 8)) * max(mpfr(1), abs(x)):
                    break
            roots.append(x)
        return roots


def period_lattice(model: CurveModel, policy: PrecisionPolicy = PrecisionPolicy()) -> PeriodLatticeResult:
    """Period lattice via AGM candidates, certified by g2/g3 recomputation,
    then fitted to omega * O_K."""
    bits = policy.work_bits
    with numerics.working_precision(bits + 16):
        c4, c6 = model.c_invariants()
        g2 = c4 / 12
        g3 = c6 / 216
        disc = model.discriminant()
        if abs(disc) == 0:
            raise ValueError("degenerate model")
        e = _cubic_roots(g2, g3, bits)
        pi = gmpy2.const_pi()
        cands = []
        for (i, jdx, k) in itertools.permutations(range(3)):
            a = gmpy2.sqrt(e[i] - e[k])
            b = gmpy2.sqrt(e[i] - e[jdx])
            try:
                cands.append(pi / complex_agm(a, b, bits + 16))
            except (ValueError, ZeroDivisionError):
                continue
        tol = mpfr(2) ** (-(bits // 2))
        scale = max(abs(g2), abs(g3), mpfr(1))
        best = None
        for w1, w2 in itertools.combinations(cands, 2):
            for pair in ((w1, w2), (w1, (w1 + w2) / 2), (w2, (w1 + w2) / 2)):
                try:
                    L = Lattice.build(pair[0], pair[1], bits)
                except Exception:
                    continue
                gg2, gg3 = lattice_invariants(L, bits)
                dev = abs(gg2 - g2) / scale + abs(gg3 - g3) / scale
                if best is None or dev < best[0]:
                    best = (dev, L)
                if dev < tol:
                    break
            if best is not None and best[0] < tol:
                break
        if best is None or best[0] > tol:
            raise PrecisionLoss(
                f"no certified period pair (best dev {float(best[0]) if best else float('nan'):.2e})"
            )
        return _fit_to_ok(model, best[1], bits)


def _fit_to_ok(model: CurveModel, L: Lattice, bits: int) -> PeriodLatticeResult:
    """Express the reduced basis as omega * (unimodular) * (1, omega_K)."""
    with numerics.working_precision(bits + 16):
        # recover q from tau: omega_K = (1 + i sqrt(q))/2 with tau ~ a ± omega_K
        y = 2 * abs(L.tau.imag)
        qq = gmpy2.rint(y * y)
        q = int(qq)
        if q <= 0 or abs(y * y - qq) > mpfr(2) ** (-(bits // 2)):
            raise NotHomotheticToOK(f"tau does not look CM: 4*Im(tau)^2 = {float(y*y)}")
        wk = (1 + gmpy2.sqrt(mpc(-q))) / 2
        omega = L.r1
        # canonical sign: positive real part (fall back to positive imaginary)
        if omega.real < 0 or (abs(omega.real) < mpfr(2) ** (-(bits // 2)) and omega.imag < 0):
            omega = -omega
        resid = mpfr(0)
        for w in (L.r1, L.r2):
            t = w / omega
            bcoef = t.imag / wk.imag
            b = gmpy2.rint(bcoef)
            a = gmpy2.rint(t.real - b * wk.real)
            dev = abs(t - (a + b * wk))
            resid = max(resid, dev)
        if resid > mpfr(2) ** (-(bits - 32)):
            raise NotHomotheticToOK(f"basis fit residual {float(resid):.2e}")
        return PeriodLatticeResult(L, mpc(omega), mpfr(resid))

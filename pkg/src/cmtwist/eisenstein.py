"""Weierstrass zeta and the weight-1 non-holomorphic Eisenstein series.

The series E1*(z, L) = zeta(z; L) - s2*z - (pi/A)*conj(z) is L-periodic once
(s2, pi/A) solve eta_i = s2*w_i + (pi/A)*conj(w_i) for the two quasi-periods.
zeta itself is evaluated through the exponentially convergent q-series on a
Gauss-reduced basis, with the point reduced into the fundamental cell and
the quasi-period shift added back.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from . import numerics
from .errors import PoleAtLatticePoint, PrecisionLoss, SingularSolve


@dataclass(frozen=True, eq=False)
class Lattice:
    """Complex lattice with original and Gauss-reduced bases at fixed bits."""

    w1: mpc
    w2: mpc
    r1: mpc  # reduced basis, Im(r2/r1) > 0, |Re tau| <= 1/2 + eps, |tau| >= 1 - eps
    r2: mpc
    tau: mpc
    bits: int

    @classmethod
    def build(cls, w1, w2, bits: int) -> "Lattice":
        with numerics.working_precision(bits):
            a = mpc(w1)
            b = mpc(w2)
            if a == 0 or b == 0:
                raise SingularSolve("zero basis vector")
            tau = b / a
            if tau.imag == 0:
                raise SingularSolve("basis is R-dependent")
            if tau.imag < 0:
                b = -b
            # Gauss reduction
            for _ in range(10000):
                t = b / a
                n = int(gmpy2.rint(t.real))
                if n:
                    b = b - n * a
                if abs(b) < abs(a):
                    a, b = b, a
                    if (b / a).imag < 0:
                        b = -b
                else:
                    t = b / a
                    if abs(t.real) <= mpfr("0.5000001") and abs(t) >= mpfr("0.9999999"):
                        break
            else:
                raise PrecisionLoss("lattice reduction did not stabilize")
            tau = b / a
            if tau.imag < 0:
                b = -b
                tau = b / a
            return cls(mpc(w1), mpc(w2), a, b, tau, bits)

    def area(self) -> mpfr:
        # covolume |Im(conj(r1) * r2)|
        v = (self.r1.conjugate() * self.r2).imag
        return abs(v)

    def coords(self, z: mpc) -> tuple[mpfr, mpfr]:
        """Real coordinates (x, y) with z = x*r1 + y*r2."""
        det = self.r1.real * self.r2.imag - self.r1.imag * self.r2.real
        if det == 0:
            raise SingularSolve("degenerate basis")
        x = (z.real * self.r2.imag - z.imag * self.r2.real) / det
        y = (self.r1.real * z.imag - self.r1.imag * z.real) / det
        return x, y

    def reduce_point(self, z: mpc) -> tuple[mpc, int, int]:
        """(z_red, m, n) with z = z_red + m*r1 + n*r2, coords in [-1/2, 1/2]."""
        x, y = self.coords(z)
        m = int(gmpy2.rint(x))
        n = int(gmpy2.rint(y))
        return z - m * self.r1 - n * self.r2, m, n


@dataclass(frozen=True, eq=False)
class EisensteinCtx:
    """Quasi-period data: eta_i for the reduced basis and the (s2, areaInv)
    solution of eta_i = s2*r_i + areaInv*conj(r_i)."""

    lattice: Lattice
    eta1: mpc
    eta2: mpc
    s2: mpc
    area_inv: mpc


def _nome(L: Lattice):
    with numerics.working_precision(L.bits + 16):
        two_pi_i = mpc(0, 2 * gmpy2.const_pi())
        return gmpy2.exp(two_pi_i * L.tau)


def _e2(tau: mpc, bits: int) -> mpc:
    """Weight-2 quasi-modular series 1 - 24 * sum sigma_1(n) q^n, via
    sum n*q^n/(1-q^n)."""
    with numerics.working_precision(bits + 16):
        q = gmpy2.exp(mpc(0, 2 * gmpy2.const_pi()) * tau)
        tol = mpfr(2) ** (-(bits + 8))
        acc = mpc(0)
        qn = mpc(1)
        for n in range(1, 100000):
            qn = qn * q
            term = n * qn / (1 - qn)
            acc += term
            if abs(term) < tol * (1 + abs(acc)):
                break
        else:
            raise PrecisionLoss("E2 series did not converge")
        return 1 - 24 * acc


def _zeta_fundamental(v: mpc, tau: mpc, eta_hat: mpc, bits: int) -> mpc:
    """zeta(v; Z + Z*tau) for v = x + y*tau with |x|, |y| <= 1/2 + eps.

    zeta(v) = eta_hat*v + pi*i*(u+1)/(u-1)
              + 2*pi*i * sum_{n>=1} [ (q^n/u)/(1-q^n/u) - (q^n u)/(1-q^n u) ],
    u = exp(2*pi*i*v), q = exp(2*pi*i*tau); eta_hat = pi^2 E2(tau)/3.
    """
    with numerics.working_precision(bits + 16):
        two_pi_i = mpc(0, 2 * gmpy2.const_pi())
        q = gmpy2.exp(two_pi_i * tau)
        u = gmpy2.exp(two_pi_i * v)
        if abs(u - 1) < mpfr(2) ** (-(bits + 4)):
            raise PoleAtLatticePoint("z lies on the lattice")
        acc = mpc(0)
        qn = mpc(1)
        tol = mpfr(2) ** (-(bits + 8))
        uinv = 1 / u
        for _ in range(1, 100000):
            qn = qn * q
            t1 = qn * uinv
            t2 = qn * u
            term = t1 / (1 - t1) - t2 / (1 - t2)
            acc += term
            if abs(qn) * (abs(u) + abs(uinv)) < tol:
                break
        else:
            raise PrecisionLoss("zeta q-series did not converge")
        pi_i = two_pi_i / 2
        return eta_hat * v + pi_i * (u + 1) / (u - 1) + two_pi_i * acc


def quasi_periods(L: Lattice) -> EisensteinCtx:
    """Compute eta1, eta2 and solve for (s2, areaInv); check Legendre."""
    bits = L.bits
    with numerics.working_precision(bits + 16):
        tau = L.tau
        e2 = _e2(tau, bits)
        pi = gmpy2.const_pi()
        eta_hat = pi * pi * e2 / 3  # eta for period 1 of Z + Z*tau
        eta1 = eta_hat / L.r1
        # eta2 independently from the series at v = tau/2: eta2 = 2*zeta(r2/2)
        z_half = _zeta_fundamental(tau / 2, tau, eta_hat, bits)
        eta2 = 2 * z_half / L.r1
        legendre = eta1 * L.r2 - eta2 * L.r1 - mpc(0, 2 * pi)
        if abs(legendre) > mpfr(2) ** (-(bits - 16)) * (2 * pi):
            raise PrecisionLoss(f"Legendre relation residual {abs(legendre):.3e}")
        # solve s2*r_i + areaInv*conj(r_i) = eta_i
        r1, r2 = L.r1, L.r2
        det = r1 * r2.conjugate() - r2 * r1.conjugate()
        if det == 0:
            raise SingularSolve("degenerate lattice in quasi-period solve")
        s2 = (eta1 * r2.conjugate() - eta2 * r1.conjugate()) / det
        area_inv = (r1 * eta2 - r2 * eta1) / det
    with numerics.working_precision(bits):
        return EisensteinCtx(L, mpc(eta1), mpc(eta2), mpc(s2), mpc(area_inv))


def weierstrass_zeta(z: mpc, L: Lattice, ctx: EisensteinCtx | None = None) -> mpc:
    """zeta(z; L) via the reduced q-series plus quasi-period shifts."""
    bits = L.bits
    if ctx is None:
        ctx = quasi_periods(L)
    with numerics.working_precision(bits + 16):
        z = mpc(z)
        z_red, m, n = L.reduce_point(z)
        if abs(z_red) < mpfr(2) ** (-(bits + 4)) * abs(L.r1):
            raise PoleAtLatticePoint("z lies on the lattice")
        tau = L.tau
        e2 = _e2(tau, bits)
        eta_hat = gmpy2.const_pi() ** 2 * e2 / 3
        v = z_red / L.r1
        base = _zeta_fundamental(v, tau, eta_hat, bits) / L.r1
        return base + m * ctx.eta1 + n * ctx.eta2


def e1star(z: mpc, L: Lattice, ctx: EisensteinCtx) -> mpc:
    """E1*(z, L) = zeta(z) - s2*z - areaInv*conj(z); L-periodic and odd."""
    with numerics.working_precision(L.bits + 16):
        z = mpc(z)
        zeta = weierstrass_zeta(z, L, ctx)
        out = zeta - ctx.s2 * z - ctx.area_inv * z.conjugate()
    with numerics.working_precision(L.bits):
        return mpc(out)


def zeta_bruteforce(z, L: Lattice, cutoff: float) -> tuple[mpc, mpfr]:
    """Truncated lattice sum 1/z + sum_{0<|w|<=X} [1/(z-w) + 1/w + z/w^2].

    Independent oracle. The summand telescopes to z^2/(w^2 (z-w)); over the
    exactly symmetric disk |w| <= X pairs (w, -w) combine to O(|z|^3/|w|^4),
    giving the explicit tail bound below (a factor-4 safety margin included).
    Evaluated in float64; a roundoff allowance is folded into the bound.
    """
    X = float(cutoff)
    with numerics.working_precision(L.bits):
        zc = complex(mpc(z))
        r1 = complex(L.r1)
        r2 = complex(L.r2)
        area = float(L.area())
    cov = (abs(r1) + abs(r2)) / 2
    if X < 4 * (abs(zc) + cov):
        raise ValueError("cutoff too small for the stated tail bound")
    # index ranges from the dual basis: |m| <= X*|r2|/A + 1 etc.
    M = int(X * abs(r2) / area) + 2
    N = int(X * abs(r1) / area) + 2
    ms = np.arange(-M, M + 1)
    ns = np.arange(-N, N + 1)
    w = ms[:, None] * complex(r1) + ns[None, :] * complex(r2)
    mask = (np.abs(w) <= X) & (np.abs(w) > 0)
    wm = w[mask]
    terms = zc * zc / (wm * wm * (zc - wm))
    val = 1.0 / zc + np.sum(terms)
    tail = 4 * 2 * np.pi * abs(zc) ** 3 * (1 + cov / X) / (
        area * X * X * (1 - (abs(zc) / X) ** 2)
    )
    roundoff = 2.0 ** (-46) * (1 + abs(val)) * max(1.0, np.log2(1 + wm.size))
    with numerics.working_precision(L.bits):
        return mpc(val), mpfr(tail + roundoff)

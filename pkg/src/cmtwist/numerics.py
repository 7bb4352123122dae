"""Arbitrary-precision real/complex kernel on top of gmpy2 (MPFR/MPC).

Values are immutable gmpy2 numbers; a computation runs under a single
working-precision context so results never carry more precision than the
narrowest input. Error accounting is a posteriori: `precision_guard`
recomputes at a higher precision and compares.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import AgmBranchFailure, PrecisionLoss

DEFAULT_PRECISION = 192

BigReal = mpfr
BigComplex = mpc

# exp() overflow guard: beyond this the result cannot be represented sanely
# and the caller has almost certainly passed a wrong smoothing parameter.
_EXP_RE_LIMIT = 1 << 40


@dataclass(frozen=True)
class PrecisionPolicy:
    """Working precision P, guard bits G for comparisons, verify delta D."""

    work_bits: int = DEFAULT_PRECISION
    guard_bits: int = 32
    verify_delta: int = 64

    def __post_init__(self):
        if self.work_bits < 64:
            raise ValueError("work_bits must be >= 64")
        if not 0 < self.guard_bits < self.work_bits:
            raise ValueError("guard_bits must be in (0, work_bits)")
        if self.verify_delta <= 0:
            raise ValueError("verify_delta must be positive")

    @property
    def eps_guard(self) -> mpfr:
        return mpfr(2) ** (-(self.work_bits - self.guard_bits))


def working_precision(bits: int):
    """Context manager setting the thread's working precision in bits."""
    return gmpy2.context(precision=bits)


def to_real(x, bits: int = DEFAULT_PRECISION) -> mpfr:
    with working_precision(bits):
        if isinstance(x, Fraction):
            return mpfr(gmpy2.mpq(x.numerator, x.denominator))
        return mpfr(x)


def to_complex(x, y=0, bits: int = DEFAULT_PRECISION) -> mpc:
    with working_precision(bits):
        return mpc(to_real(x, bits), to_real(y, bits))


def eps_for(bits: int, slack: int = 0) -> mpfr:
    return mpfr(2) ** (-(bits - slack))


def complex_exp(z: mpc, bits: int = DEFAULT_PRECISION) -> mpc:
    """exp(z) at the working precision; rejects |Re z| > 2^40."""
    with working_precision(bits):
        z = mpc(z)
        if not gmpy2.is_finite(z.real) or not gmpy2.is_finite(z.imag):
            raise ValueError("complex_exp requires a finite argument")
        if abs(z.real) > _EXP_RE_LIMIT:
            raise OverflowError("|Re z| > 2^40 in complex_exp; parameter misuse")
        return gmpy2.exp(z)


def _agm_right_sqrt(prod: mpc, a1: mpc, bits: int) -> mpc:
    # "right choice" of branch: |a1 - b1| <= |a1 + b1|; tie broken toward
    # Im(b1/a1) > 0 so the iteration cannot oscillate between branches.
    r = gmpy2.sqrt(prod)
    if abs(a1 - r) > abs(a1 + r):
        return -r
    if abs(a1 - r) == abs(a1 + r) and (r / a1).imag < 0:
        return -r
    return r


def complex_agm(a, b, bits: int = DEFAULT_PRECISION) -> mpc:
    """Common limit of the arithmetic-geometric mean iteration.

    Square-root branches are chosen so |a_n - b_n| <= |a_n + b_n| at every
    step, which makes the iteration converge quadratically for any nonzero,
    non-antipodal pair.
    """
    with working_precision(bits + 16):
        a = mpc(a)
        b = mpc(b)
        if a == 0 or b == 0:
            raise ValueError("complex_agm requires nonzero arguments")
        if a + b == 0:
            raise ValueError("complex_agm undefined for antipodal arguments")
        tol = mpfr(2) ** (-(bits + 4))
        max_iter = 8 * max(8, bits.bit_length() ** 2)
        # generous cap; quadratic convergence needs ~log2(bits) + O(1) steps
        for _ in range(max_iter):
            if abs(a - b) <= tol * abs(a):
                break
            a1 = (a + b) / 2
            b1 = _agm_right_sqrt(a * b, a1, bits)
            a, b = a1, b1
        else:
            raise AgmBranchFailure("AGM did not converge; bad branch sequence")
    with working_precision(bits):
        return mpc(a)


def precision_guard(f, policy: PrecisionPolicy = PrecisionPolicy()) -> mpc:
    """Run `f(bits)` at P and P+D; return the P result if they agree.

    Agreement means |v_P - v_{P+D}| <= 2^-(P-G) * max(1, |v_P|). The callable
    must be deterministic in everything except the precision.
    """
    lo = f(policy.work_bits)
    hi = f(policy.work_bits + policy.verify_delta)
    with working_precision(policy.work_bits + policy.verify_delta):
        dev = abs(mpc(lo) - mpc(hi))
        scale = max(mpfr(1), abs(mpc(lo)))
        if dev > policy.eps_guard * scale:
            raise PrecisionLoss(
                f"recompute-and-compare deviation {dev:.3e} exceeds bound "
                f"2^-{policy.work_bits - policy.guard_bits}"
            )
    return lo

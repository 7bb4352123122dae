"""End-to-end verification: twist validation, L-values two ways, algebraic
recognition of the ratio ladder, and exact 2-adic valuation checks.

The headline assertion: for every divisor d of R, the ratio
Phi(d) = sqrt(d) L(conj phi_d, 1) / L(conj phi, 1) lies in T and has
ord = (number of prime factors of d) at the degree-one prime above 2.
Ratios are period-free, so no curve model enters except for the absolute
q = 7 normalization, where the builtin minimal model pins Omega.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import gmpy2
from gmpy2 import mpc, mpfr

from . import numerics
from .cmpoints import (
    factor_family,
    partial_l_eisenstein,
    psi_sum,
)
from .curves import builtin_minimal_model, period_lattice
from .dyadic import (
    DEFAULT_DYADIC_PRECISION,
    build_embedding,
    embed_T_element,
)
from .errors import CheckFailed, NotInFamily, NoRelationFound
from .hecke import build_character, character_embeddings
from .lfunc import full_lvalues, imprimitivity_factor, partial_l_afe
from .numerics import PrecisionPolicy
from .quadfield import ImagQuadField
from .recognition import DEFAULT_DENOM_BOUND, TElement, algdep, reconstruct_T_element


@dataclass(frozen=True)
class TwistFamilyElement:
    R: int
    factors: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.factors)


def validate_twist(field: ImagQuadField, R: int) -> TwistFamilyElement:
    """Squarefree R whose prime factors are ≡ 1 mod 4 and inert in K."""
    return TwistFamilyElement(R, factor_family(field, R))


def divisors_of(R: int) -> list[int]:
    out = [d for d in range(1, R + 1) if R % d == 0]
    return out


def omega_count(d: int) -> int:
    cnt = 0
    p = 2
    while p * p <= d:
        if d % p == 0:
            cnt += 1
            while d % p == 0:
                d //= p
        p += 1
    return cnt + (1 if d > 1 else 0)


def galois_sqrt_sum(k: int, signs: tuple[int, ...]) -> int:
    """sum over all subsets S of {1..k} of prod_{i in S} signs_i, exhaustively."""
    if len(signs) != k or any(s not in (-1, 1) for s in signs):
        raise ValueError("signs must be a ±1 vector of length k")
    total = 0
    for picks in itertools.product((0, 1), repeat=k):
        term = 1
        for s, take in zip(signs, picks):
            if take:
                term *= s
        total += term
    return total


@dataclass
class DivisorRow:
    d: int
    k_d: int
    lvalues: list  # complex per embedding
    lerrors: list
    root_numbers: list
    phi: TElement | None
    phi_ord: int | None
    msl_value: Fraction | None  # exact, h = 1 absolute mode only
    msl_ord: int | None


@dataclass
class VerificationReport:
    q: int
    R: int
    k: int
    factors: tuple[int, ...]
    method: str
    config: dict
    rows: list[DivisorRow] = dc_field(default_factory=list)
    cross_path_dev: float | None = None
    checks: list[dict] = dc_field(default_factory=list)
    runtime_seconds: float = 0.0

    def add_check(self, name: str, ok: bool, evidence: str):
        self.checks.append(
            {"name": name, "status": "pass" if ok else "fail", "evidence": evidence}
        )

    @property
    def all_passed(self) -> bool:
        return all(c["status"] == "pass" for c in self.checks)

    def failed_checks(self) -> list[str]:
        return [c["name"] for c in self.checks if c["status"] != "pass"]

    def to_json_dict(self) -> dict:
        rows = []
        for r in self.rows:
            rows.append(
                {
                    "d": r.d,
                    "k_d": r.k_d,
                    "msl_re": [str(v.real) for v in r.lvalues],
                    "msl_im": [str(v.imag) for v in r.lvalues],
                    "err": [str(e) for e in r.lerrors],
                    "root_numbers": [str(w) for w in r.root_numbers],
                    "phi_coeffs": None
                    if r.phi is None
                    else [[str(k.a), str(k.b)] for k in r.phi.coeffs],
                    "ord_P": r.phi_ord,
                    "msl_exact": None if r.msl_value is None else str(r.msl_value),
                    "msl_ord": r.msl_ord,
                }
            )
        return {
            "q": self.q,
            "R": self.R,
            "k": self.k,
            "factors": list(self.factors),
            "method": self.method,
            "config": self.config,
            "per_divisor": rows,
            "cross_path_dev": None
            if self.cross_path_dev is None
            else repr(self.cross_path_dev),
            "checks": self.checks,
            "runtime_seconds": round(self.runtime_seconds, 3),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def to_tsv(self) -> str:
        lines = ["d\tk_d\tord_P\tmsl_ord\tL_values"]
        for r in self.rows:
            lv = ";".join(f"{complex(v):.18e}" for v in r.lvalues)
            lines.append(f"{r.d}\t{r.k_d}\t{r.phi_ord}\t{r.msl_ord}\t{lv}")
        lines.append("")
        lines.append("check\tstatus\tevidence")
        for c in self.checks:
            lines.append(f"{c['name']}\t{c['status']}\t{c['evidence']}")
        return "\n".join(lines) + "\n"


def compute_msl(
    q: int,
    d: int,
    method: str = "afe",
    policy: PrecisionPolicy = PrecisionPolicy(),
) -> list[mpc]:
    """sqrt(d) * L(conj phi_d, 1) / Omega per embedding; absolute mode needs a
    builtin minimal model (q in {7, 23}), otherwise raises UnsupportedQ."""
    field = ImagQuadField(q)
    chi = build_character(field)
    bits = policy.work_bits
    res = period_lattice(builtin_minimal_model(q, policy), policy)
    lvals = _lvalues_by_method(chi, d, method, policy)
    with numerics.working_precision(bits):
        rd = gmpy2.sqrt(mpfr(d))
        return [rd * v / res.omega for v in lvals]


def _lvalues_by_method(chi, d: int, method: str, policy: PrecisionPolicy) -> list[mpc]:
    bits = policy.work_bits
    if method == "afe":
        return [r.value for r in full_lvalues(chi, d, policy)]
    if method == "eisenstein":
        embs = character_embeddings(chi, bits)
        with numerics.working_precision(bits):
            out = []
            for emb in embs:
                acc = mpc(0)
                for j in range(chi.h):
                    acc += partial_l_eisenstein(chi, emb, d, d, j, policy)
                out.append(acc)
            return out
    raise ValueError(f"unknown method {method!r}")


def cross_path_deviation(
    chi,
    R: int,
    policy: PrecisionPolicy,
    divisors: list[int] | None = None,
) -> float:
    """max |AFE - Eisenstein| over all divisors, classes, and embeddings."""
    bits = policy.work_bits
    embs = character_embeddings(chi, bits)
    worst = mpfr(0)
    with numerics.working_precision(bits):
        for d in divisors or divisors_of(R):
            for j in range(chi.h):
                for emb in embs:
                    pe = partial_l_eisenstein(chi, emb, d, R, j, policy)
                    pa = partial_l_afe(chi, emb, d, R, j, policy)
                    worst = max(worst, abs(pe - pa))
    return float(worst)


def verify_theorem(
    q: int,
    R: int,
    method: str = "afe",
    policy: PrecisionPolicy = PrecisionPolicy(),
    dyadic_prec: int = DEFAULT_DYADIC_PRECISION,
    denom_bound: int = DEFAULT_DENOM_BOUND,
    raise_on_fail: bool = True,
) -> VerificationReport:
    """Check ord(Phi(d)) = k_d for every d | R (plus the absolute q = 7
    ladder), the root numbers, and the nonvanishing margin."""
    t0 = time.time()
    if q % 16 != 7:
        raise NotInFamily(
            f"q = {q} is not ≡ 7 mod 16; the valuation theorem does not apply"
        )
    field = ImagQuadField(q)
    twist = validate_twist(field, R)
    if twist.k == 0:
        raise NotInFamily("R = 1 carries nothing to verify; R must be > 1")
    chi = build_character(field)
    bits = policy.work_bits
    embs = character_embeddings(chi, bits)
    emb2 = build_embedding(chi, dyadic_prec)
    report = VerificationReport(
        q=q,
        R=R,
        k=twist.k,
        factors=twist.factors,
        method=method,
        config={
            "precision_bits": bits,
            "dyadic_precision": dyadic_prec,
            "denom_bound": denom_bound,
            "method": method,
        },
    )

    absolute = q == 7  # Omega pinned by the builtin minimal model
    omega = None
    if absolute:
        omega = period_lattice(builtin_minimal_model(q, policy), policy).omega

    divisors = divisors_of(R)
    base_lvals = full_lvalues(chi, 1, policy)
    with numerics.working_precision(bits):
        for d in divisors:
            k_d = omega_count(d)
            lres = full_lvalues(chi, d, policy)
            rd = gmpy2.sqrt(mpfr(d))
            ratios = [rd * lres[i].value / base_lvals[i].value for i in range(chi.h)]
            phi = reconstruct_T_element(
                ratios, embs, field, denom_bound=denom_bound, bits=bits
            )
            phi_ord = embed_T_element(phi.coeffs, emb2).ord()
            row = DivisorRow(
                d=d,
                k_d=k_d,
                lvalues=[r.value for r in lres],
                lerrors=[r.error_bound for r in lres],
                root_numbers=[r.root_number for r in lres],
                phi=phi,
                phi_ord=phi_ord,
                msl_value=None,
                msl_ord=None,
            )
            report.add_check(
                f"ord_P(Phi({d})) == {k_d}",
                phi_ord == k_d,
                f"recognized Phi({d}) with ord {phi_ord}",
            )
            if absolute:
                msl_c = rd * lres[0].value / omega
                from .recognition import round_to_K

                msl_k = round_to_K(msl_c, field, denom_bound=denom_bound, bits=bits)
                assert msl_k.b == 0, "h = 1 absolute value must be rational"
                row.msl_value = msl_k.a
                v = msl_k.a
                msl_ord = (
                    (v.numerator & -v.numerator).bit_length()
                    - (v.denominator & -v.denominator).bit_length()
                )
                row.msl_ord = msl_ord
                report.add_check(
                    f"ord_p(msl({d})) == {k_d - 1}",
                    msl_ord == k_d - 1,
                    f"msl({d}) = {v}",
                )
            report.rows.append(row)

        # root numbers: modulus one and value +1
        tol_w = mpfr(2) ** -48
        ok_w = True
        evid = []
        for row in report.rows:
            for w in row.root_numbers:
                ok_w &= abs(abs(w) - 1) < tol_w and abs(w - 1) < tol_w
                evid.append(f"|w-1|={float(abs(w - 1)):.1e}")
        report.add_check("root numbers unitary and +1", bool(ok_w), "; ".join(evid[:4]))

        # nonvanishing margin for the top twist
        top = report.rows[-1]
        prod = mpfr(1)
        err_rel = mpfr(0)
        for v, e in zip(top.lvalues, top.lerrors):
            prod *= abs(v)
            err_rel += e / abs(v)
        margin_ok = prod > 10 * err_rel * prod
        report.add_check(
            "nonvanishing margin",
            bool(margin_ok),
            f"|prod L| = {float(prod):.6e} vs 10*err = {float(10 * err_rel * prod):.2e}",
        )

        # exact parity of the middle-divisor sum
        mid = sum(d for d in divisors if d not in (1, R))
        report.add_check(
            "middle divisor parity", mid % 2 == 0, f"sum = {mid} (k = {twist.k})"
        )

        if method in ("both", "eisenstein"):
            dev = cross_path_deviation(chi, R, policy)
            report.cross_path_dev = dev
            report.add_check(
                "cross-path deviation < 2^-64",
                dev < 2.0 ** -64,
                f"max |AFE - Eisenstein| = {dev:.3e}",
            )

    report.runtime_seconds = time.time() - t0
    if raise_on_fail and not report.all_passed:
        raise CheckFailed(
            f"failed: {', '.join(report.failed_checks())}", report=report
        )
    return report


def finite_level_identity(
    q: int, R: int, policy: PrecisionPolicy = PrecisionPolicy()
) -> mpfr:
    """Residual of sum_{d|R} L_R(conj phi_d, 1) = 2^k * Psi (class number one).

    Exact at finite level because the trivial class makes every character
    value at the representative ideal exactly 1.
    """
    field = ImagQuadField(q)
    chi = build_character(field)
    if chi.h != 1:
        raise ValueError("finite-level identity implemented for h = 1 only")
    twist = validate_twist(field, R)
    if twist.k == 0:
        raise NotInFamily("R must be a nontrivial family element")
    bits = policy.work_bits
    with numerics.working_precision(bits):
        lhs = mpc(0)
        for d in divisors_of(R):
            L = full_lvalues(chi, d, policy)[0].value
            lhs += L * numerics.to_real(imprimitivity_factor(d, R), bits)
        rhs = (1 << twist.k) * psi_sum(chi, R, 0, policy)
        return abs(lhs - rhs)


def _newton_polygon_slopes(coeffs: list[int]) -> list[tuple[Fraction, int]]:
    """Lower 2-adic Newton polygon of sum a_i x^i: [(slope, length), ...];
    root valuations are the negated slopes with multiplicity = length."""
    pts = []
    for i, a in enumerate(coeffs):
        if a:
            v = (a & -a).bit_length() - 1
            pts.append((i, v))
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # keep lower convexity
            if (y2 - y1) * (p[0] - x1) >= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    out = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        out.append((Fraction(y2 - y1, x2 - x1), x2 - x1))
    return out


def psi_integrality_spotcheck(policy: PrecisionPolicy | None = None) -> dict:
    """Stretch check (q = 7, R = 5): recognize the basic trace value as an
    algebraic number of degree <= 4 and read off its 2-adic orders at the
    places above 2 from the Newton polygon. Non-blocking: recognition
    failure is reported, not raised."""
    pol = policy or PrecisionPolicy(work_bits=256)
    bits = pol.work_bits
    field = ImagQuadField(7)
    chi = build_character(field)
    out: dict = {"q": 7, "R": 5, "status": "na"}
    with numerics.working_precision(bits):
        psi_conv = psi_sum(chi, 5, 0, pol)
        omega = period_lattice(builtin_minimal_model(7, pol), pol).omega
        psi_true = psi_conv / omega
        out["psi"] = str(psi_true)
        if abs(psi_true.imag) > mpfr(2) ** (-(bits // 2)):
            out["status"] = "failed"
            out["note"] = "trace value unexpectedly non-real"
            return out
        try:
            poly = algdep(psi_true.real, 4, height_bits=40, bits=bits)
        except NoRelationFound:
            out["status"] = "no-relation"
            return out
        out["min_poly"] = poly
        slopes = _newton_polygon_slopes(poly)
        ords = []
        for slope, length in slopes:
            ords.extend([-slope] * length)
        out["ords_above_2"] = [str(o) for o in ords]
        ok = all(o >= 0 for o in ords)
        # valuation additivity control: 2 * psi shifts every order by one
        poly2 = algdep(2 * psi_true.real, 4, height_bits=44, bits=bits)
        slopes2 = _newton_polygon_slopes(poly2)
        ords2 = []
        for slope, length in slopes2:
            ords2.extend([-slope] * length)
        shift_ok = sorted(ords2) == sorted(o + 1 for o in ords)
        out["scaled_ords"] = [str(o) for o in ords2]
        out["status"] = "pass" if (ok and shift_ok) else "failed"
        return out

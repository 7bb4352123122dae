"""Recognition of high-precision complex values as exact elements of T.

The workhorse is a small exact-integer LLL; K-rounding finds (den, a, b)
with den*x ≈ a + b*omega, and algdep finds integer polynomial relations.
Residual acceptance is 2^-(P/3), which leaves at least P/3 bits between a
genuine recognition and a numerical coincidence at the default parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpc, mpfr

from . import numerics
from .errors import NoRelationFound, RecognitionFailed
from .hecke import CharacterEmbedding
from .quadfield import ImagQuadField, KElement

DEFAULT_DENOM_BOUND = 1 << 24
MAX_DENOM_BOUND = 1 << 48


def _lll(basis: list[list[int]], delta: Fraction = Fraction(3, 4)) -> list[list[int]]:
    """Textbook LLL on integer row vectors with exact rational Gram-Schmidt."""
    b = [list(map(int, row)) for row in basis]
    n = len(b)

    def dot(x, y):
        return sum(xi * yi for xi, yi in zip(x, y))

    def gso():
        ortho: list[list[Fraction]] = []
        mu = [[Fraction(0)] * n for _ in range(n)]
        norms = []
        for i in range(n):
            w = [Fraction(x) for x in b[i]]
            for j in range(i):
                if norms[j] == 0:
                    mu[i][j] = Fraction(0)
                    continue
                mu[i][j] = Fraction(dot_f(b[i], ortho[j]), 1) / norms[j]
                w = [wi - mu[i][j] * oj for wi, oj in zip(w, ortho[j])]
            ortho.append(w)
            norms.append(sum(x * x for x in w))
        return ortho, mu, norms

    def dot_f(x, y):
        return sum(Fraction(xi) * yi for xi, yi in zip(x, y))

    ortho, mu, norms = gso()
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            if abs(mu[k][j]) > Fraction(1, 2):
                r = round(mu[k][j])
                b[k] = [x - r * y for x, y in zip(b[k], b[j])]
                ortho, mu, norms = gso()
        if norms[k] >= (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            ortho, mu, norms = gso()
            k = max(k - 1, 1)
    return b


@dataclass(frozen=True)
class TElement:
    """Element of T in the power basis {1, t, ..., t^(h-1)} over K."""

    field: ImagQuadField
    coeffs: tuple[KElement, ...]

    @property
    def h(self) -> int:
        return len(self.coeffs)

    def shared_denominator(self) -> int:
        den = 1
        for k in self.coeffs:
            for fr in (k.a, k.b):
                den = den * fr.denominator // _gcd(den, fr.denominator)
        return den

    def evaluate(self, emb: CharacterEmbedding) -> mpc:
        with numerics.working_precision(emb.bits):
            acc = mpc(0)
            tp = mpc(1)
            for k in self.coeffs:
                acc += k.embed(emb.bits) * tp
                tp = tp * emb.t
            return acc

    def is_constant(self) -> bool:
        return all(k.is_zero() for k in self.coeffs[1:])


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def round_to_K(
    x: mpc,
    field: ImagQuadField,
    denom_bound: int = DEFAULT_DENOM_BOUND,
    bits: int = numerics.DEFAULT_PRECISION,
) -> KElement:
    """Nearest (a + b*omega)/den with den bounded; LLL on the relation lattice.

    Raises RecognitionFailed when no relation passes the residual threshold
    2^-(bits/3) within the (doubled-up-to-maximum) denominator bound.
    """
    with numerics.working_precision(bits):
        x = mpc(x)
        if abs(x) > mpfr(2) ** 60:
            raise RecognitionFailed("value too large to round")
        w = field.embed_omega(bits)
        scale = mpfr(2) ** (bits - 16)
        rows = [
            [1, 0, 0, int(gmpy2.rint(scale * x.real)), int(gmpy2.rint(scale * x.imag))],
            [0, 1, 0, -int(scale), 0],
            [0, 0, 1, -int(gmpy2.rint(scale * w.real)), -int(gmpy2.rint(scale * w.imag))],
        ]
        red = _lll(rows)
        threshold = mpfr(2) ** (-(bits // 3))
        bound = denom_bound
        while bound <= MAX_DENOM_BOUND:
            best = None
            for row in red:
                den, a, b = row[0], row[1], row[2]
                if den == 0:
                    continue
                if den < 0:
                    den, a, b = -den, -a, -b
                if den > bound:
                    continue
                cand = KElement(field, Fraction(a, den), Fraction(b, den))
                residual = abs(x - cand.embed(bits))
                if residual < threshold and (best is None or residual < best[0]):
                    best = (residual, cand)
            if best is not None:
                return best[1]
            bound *= 2
        raise RecognitionFailed(
            f"no K-element fits within denominator 2^{MAX_DENOM_BOUND.bit_length()-1}"
        )


def reconstruct_T_element(
    values: list[mpc],
    embs: tuple[CharacterEmbedding, ...],
    field: ImagQuadField,
    denom_bound: int = DEFAULT_DENOM_BOUND,
    bits: int = numerics.DEFAULT_PRECISION,
) -> TElement:
    """Solve the Vandermonde system in the embedding roots and round to K.

    values[l] must be the complex value under embedding embs[l]; the output
    re-evaluates to each input within 2^-(bits/3), otherwise recognition fails.
    """
    h = len(embs)
    if len(values) != h:
        raise ValueError("need one value per embedding")
    with numerics.working_precision(bits):
        if h == 1:
            kappa = [mpc(values[0])]
        else:
            # Gaussian elimination on V[l][j] = t_l^j
            mat = [[embs[l].t ** j for j in range(h)] + [mpc(values[l])] for l in range(h)]
            for col in range(h):
                piv = max(range(col, h), key=lambda r: abs(mat[r][col]))
                mat[col], mat[piv] = mat[piv], mat[col]
                if mat[col][col] == 0:
                    raise RecognitionFailed("singular embedding system")
                for r in range(h):
                    if r != col:
                        f = mat[r][col] / mat[col][col]
                        mat[r] = [a - f * b for a, b in zip(mat[r], mat[col])]
            kappa = [mat[j][h] / mat[j][j] for j in range(h)]
        coeffs = tuple(
            round_to_K(k, field, denom_bound=denom_bound, bits=bits) for k in kappa
        )
        elem = TElement(field, coeffs)
        threshold = mpfr(2) ** (-(bits // 3))
        for l, v in enumerate(values):
            if abs(elem.evaluate(embs[l]) - mpc(v)) > threshold:
                raise RecognitionFailed(
                    f"re-evaluation residual at embedding {l} exceeds 2^-{bits//3}"
                )
        return elem


def algdep(
    x,
    degree: int,
    height_bits: int = 48,
    bits: int = numerics.DEFAULT_PRECISION,
) -> list[int]:
    """Integer polynomial of degree <= `degree` with x as an approximate root.

    Returns ascending coefficients, content-free, positive leading term.
    Certification: |p(x)| must be below 2^-(bits/2) * (height scale); raises
    NoRelationFound otherwise.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if degree * height_bits > bits - 32:
        raise ValueError("degree * height exceeds the working precision")
    with numerics.working_precision(bits):
        z = mpc(x)
        scale = mpfr(2) ** (bits - 24)
        dim = degree + 1
        rows = []
        powers = [mpc(1)]
        for _ in range(degree):
            powers.append(powers[-1] * z)
        for i in range(dim):
            row = [0] * dim + [
                int(gmpy2.rint(scale * powers[i].real)),
                int(gmpy2.rint(scale * powers[i].imag)),
            ]
            row[i] = 1
            rows.append(row)
        red = _lll(rows)
        pow_scale = max(mpfr(1), max(abs(p) for p in powers))
        best = None
        for row in red:
            coeffs = row[:dim]
            if all(c == 0 for c in coeffs):
                continue
            hbits = max(abs(c) for c in coeffs).bit_length()
            if hbits > height_bits:
                continue
            val = sum(c * p for c, p in zip(coeffs, powers))
            # accept only below the geometric mean of the evaluation floor
            # 2^-bits and the pigeonhole floor 2^-(dim*hbits): a spurious
            # relation of this height cannot get that small
            thr = mpfr(2) ** (-(bits + dim * hbits) // 2) * pow_scale
            if abs(val) > thr:
                continue
            size = sum(c * c for c in coeffs)
            if best is None or size < best[0]:
                best = (size, coeffs)
        if best is None:
            raise NoRelationFound(f"no degree-{degree} relation at this precision")
        coeffs = list(best[1])
        g = 0
        for c in coeffs:
            g = _gcd(g, abs(c))
        coeffs = [c // g for c in coeffs]
        lead = next(c for c in reversed(coeffs) if c != 0)
        if lead < 0:
            coeffs = [-c for c in coeffs]
        return coeffs

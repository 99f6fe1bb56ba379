"""
Elliptic curves over Q given by integral Weierstrass models.

Local data comes from Tate's algorithm, point counts from a quadratic
character table, and torsion from integral points on the short model
y^2 = x^3 - 27*c4*x - 54*c6 bounded by reductions at good primes.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import gcd, prod
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from sympy import Poly, factorint, legendre_symbol, primefactors, primerange, symbols

from errors import AmbiguousMatch, BadReduction, EngineError, SchemaError
from exactlinalg import ord_p
from newform import RationalNewform, eigenvalue, sturm_bound

log = logging.getLogger(__name__)

Ainvs = Tuple[int, int, int, int, int]
_X = symbols("x")


class Flag(str, Enum):
    PROVED = "proved"
    FAILED = "failed"
    UNKNOWN = "unknown"
    NOT_CHECKED = "not_checked"

    @classmethod
    def of(cls, ok: Optional[bool]) -> "Flag":
        if ok is None:
            return cls.UNKNOWN
        return cls.PROVED if ok else cls.FAILED


# ----------------------------------------------------------------------------
# Records
# ----------------------------------------------------------------------------
def b_invariants(a: Sequence[int]) -> Tuple[int, int, int, int]:
    a1, a2, a3, a4, a6 = a
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    return b2, b4, b6, b8


def c_invariants(a: Sequence[int]) -> Tuple[int, int]:
    b2, b4, b6, _ = b_invariants(a)
    return b2 * b2 - 24 * b4, -b2 ** 3 + 36 * b2 * b4 - 216 * b6


def discriminant(a: Sequence[int]) -> int:
    b2, b4, b6, b8 = b_invariants(a)
    return -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6


class CurveRecord(BaseModel):
    model_config = ConfigDict(extra="ignore", frozen=True)

    label: str
    conductor: int = Field(alias="N", gt=0)
    ainvs: Tuple[int, int, int, int, int]
    rank: Optional[int] = Field(default=None, ge=0)
    torsion: Optional[int] = Field(default=None, gt=0)

    @field_validator("ainvs", mode="before")
    @classmethod
    def _five_invariants(cls, v):
        if not isinstance(v, (list, tuple)) or len(v) != 5:
            raise ValueError("ainvs must hold exactly 5 integers")
        return v

    @field_validator("ainvs")
    @classmethod
    def _nonsingular(cls, v):
        if discriminant(v) == 0:
            raise ValueError("singular model (discriminant 0)")
        return v

    @property
    def discriminant(self) -> int:
        return discriminant(self.ainvs)


def parse_curve_file(path: str) -> Tuple[List[CurveRecord], List[SchemaError]]:
    """Validated records plus one SchemaError per rejected line; OSError propagates."""
    records: List[CurveRecord] = []
    errors: List[SchemaError] = []
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = CurveRecord.model_validate(orjson.loads(raw))
            except (orjson.JSONDecodeError, ValidationError) as exc:
                errors.append(SchemaError(str(exc).splitlines()[0] if str(exc) else repr(exc), line=lineno))
                continue
            computed = conductor(rec.ainvs)
            if computed != rec.conductor:
                errors.append(SchemaError(f"{rec.label}: conductor {computed} != declared {rec.conductor}", line=lineno))
                continue
            records.append(rec)
    for err in errors:
        log.warning("curve file %s: %s", path, err)
    return records, errors


# ----------------------------------------------------------------------------
# Tate's algorithm
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class LocalData:
    prime: int
    kodaira_type: str
    c_q: int
    disc_valuation: int
    conductor_exponent: int
    split: Optional[bool] = None
    minimal_model: Ainvs = (0, 0, 0, 0, 0)

    @property
    def reduction(self) -> str:
        if self.conductor_exponent == 0:
            return "good"
        if self.conductor_exponent == 1:
            return "split multiplicative" if self.split else "nonsplit multiplicative"
        return "additive"


def rst_transform(a: Sequence[int], r: int, s: int, t: int) -> Ainvs:
    """Model after x = x' + r, y = y' + s*x' + t."""
    a1, a2, a3, a4, a6 = a
    return (
        a1 + 2 * s,
        a2 - s * a1 + 3 * r - s * s,
        a3 + r * a1 + 2 * t,
        a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t,
        a6 + r * a4 + r * r * a2 + r ** 3 - t * a3 - t * t - r * t * a1,
    )


def _v(x: int, p: int) -> int:
    return 10 ** 9 if x == 0 else ord_p(x, p)


def _roots_mod(coeffs: Sequence[int], p: int) -> int:
    """Number of roots in F_p, with multiplicity, of the polynomial with coefficients high to low."""
    poly = Poly([c % p for c in coeffs], _X, modulus=p)
    if poly.is_zero:
        return len(coeffs) - 1
    _, factors = poly.factor_list()
    return sum(m for fac, m in factors if fac.degree() == 1)


def _has_root(a: int, b: int, c: int, p: int) -> bool:
    a, b, c = a % p, b % p, c % p
    if a == 0:
        return b != 0 or c == 0
    return _roots_mod([a, b, c], p) > 0


def tate_local_data(a: Sequence[int], q: int) -> LocalData:
    """Kodaira symbol, Tamagawa number and conductor exponent at q for the model ``a``."""
    p = q
    a = tuple(int(x) for x in a)
    inv = lambda x: pow(x % p, -1, p)
    half = inv(2) if p != 2 else 0
    while True:
        b2, b4, b6, b8 = b_invariants(a)
        c4, c6 = c_invariants(a)
        delta = discriminant(a)
        vd = _v(delta, p)
        if vd == 0:
            return LocalData(p, "I0", 1, 0, 0, minimal_model=a)

        a1, a2, a3, a4, a6 = a
        if p == 2:
            if b2 % 2 == 0:
                r = a4 % 2
                t = (((r + a2) * r + a4) * r + a6) % 2
            else:
                r = a3 % 2
                t = (a4 + r * r) % 2
        elif p == 3:
            r = (-b6) % 3 if b2 % 3 == 0 else (-inv(b2) * b4) % 3
            t = (a1 * r + a3) % 3
        else:
            r = (-inv(12) * b2) % p if c4 % p == 0 else (-inv(12 * c4) * (c6 + b2 * c4)) % p
            t = (-half * (a1 * r + a3)) % p
        a = rst_transform(a, r, 0, t)
        a1, a2, a3, a4, a6 = a
        b2, b4, b6, b8 = b_invariants(a)

        if c4 % p:
            split = _has_root(1, a1, -a2, p)
            cp = vd if split else (2 if vd % 2 == 0 else 1)
            return LocalData(p, f"I{vd}", cp, vd, 1, split=split, minimal_model=a)
        if _v(a6, p) < 2:
            return LocalData(p, "II", 1, vd, vd, minimal_model=a)
        if _v(b8, p) < 3:
            return LocalData(p, "III", 2, vd, vd - 1, minimal_model=a)
        if _v(b6, p) < 3:
            cp = 3 if _has_root(1, a3 // p, -a6 // (p * p), p) else 1
            return LocalData(p, "IV", cp, vd, vd - 2, minimal_model=a)

        if p == 2:
            s, t = a2 % 2, 2 * ((a6 // 4) % 2)
        elif p == 3:
            s, t = a1, a3
        else:
            s, t = -a1 * half, -a3 * half
        a = rst_transform(a, 0, s, t)
        a1, a2, a3, a4, a6 = a

        b, c, d = a2 // p, a4 // (p * p), a6 // p ** 3
        w = 27 * d * d - b * b * c * c + 4 * b ** 3 * d - 18 * b * c * d + 4 * c ** 3
        x = 3 * c - b * b
        sw = (3 if x % p == 0 else 2) if w % p == 0 else 1

        if sw == 1:
            return LocalData(p, "I0*", 1 + _roots_mod([1, b, c, d], p), vd, vd - 4, minimal_model=a)

        if sw == 2:
            if p == 2:
                r = c % 2
            elif p == 3:
                r = (c * inv(b)) % 3
            else:
                r = ((b * c - 9 * d) * inv(2 * x)) % p
            a = rst_transform(a, p * r, 0, 0)
            a1, a2, a3, a4, a6 = a
            ix = iy = 3
            mx = my = p * p
            while True:
                a2t, a3t, a4t, a6t = a2 // p, a3 // my, a4 // (p * mx), a6 // (mx * my)
                if (a3t * a3t + 4 * a6t) % p:
                    cp = 4 if _has_root(1, a3t, -a6t, p) else 2
                    break
                t = my * (a6t % 2) if p == 2 else my * ((-a3t * half) % p)
                a = rst_transform(a, 0, 0, t)
                a1, a2, a3, a4, a6 = a
                my *= p
                iy += 1
                a2t, a3t, a4t, a6t = a2 // p, a3 // my, a4 // (p * mx), a6 // (mx * my)
                if (a4t * a4t - 4 * a6t * a2t) % p:
                    cp = 4 if _has_root(a2t, a4t, a6t, p) else 2
                    break
                r = mx * ((a6t * inv(a2t)) % 2) if p == 2 else mx * ((-a4t * inv(2 * a2t)) % p)
                a = rst_transform(a, r, 0, 0)
                a1, a2, a3, a4, a6 = a
                mx *= p
                ix += 1
            return LocalData(p, f"I{ix + iy - 5}*", cp, vd, vd - ix - iy + 1, minimal_model=a)

        # triple root
        if p == 2:
            r = b % 2
        elif p == 3:
            r = (-d) % 3
        else:
            r = (-b * inv(3)) % p
        a = rst_transform(a, p * r, 0, 0)
        a1, a2, a3, a4, a6 = a
        x3t, x6t = a3 // (p * p), a6 // p ** 4
        if (x3t * x3t + 4 * x6t) % p:
            cp = 3 if _has_root(1, x3t, -x6t, p) else 1
            return LocalData(p, "IV*", cp, vd, vd - 6, minimal_model=a)
        t = -p * p * (x6t % 2) if p == 2 else p * p * ((-x3t * half) % p)
        a = rst_transform(a, 0, 0, t)
        a1, a2, a3, a4, a6 = a
        if _v(a4, p) < 4:
            return LocalData(p, "III*", 2, vd, vd - 7, minimal_model=a)
        if _v(a6, p) < 6:
            return LocalData(p, "II*", 1, vd, vd - 8, minimal_model=a)
        log.debug("model %s is not minimal at %d; scaling down", a, p)
        a = (a1 // p, a2 // p ** 2, a3 // p ** 3, a4 // p ** 4, a6 // p ** 6)


def local_data(a: Sequence[int]) -> Dict[int, LocalData]:
    return {q: tate_local_data(a, q) for q in primefactors(abs(discriminant(a)))}


def conductor(a: Sequence[int]) -> int:
    return prod(q ** ld.conductor_exponent for q, ld in local_data(a).items())


def tamagawa_product(a: Sequence[int]) -> int:
    return prod(ld.c_q for ld in local_data(a).values())


def c_infinity(a: Sequence[int]) -> int:
    """Number of real components: 2 when the discriminant is positive."""
    return 2 if discriminant(a) > 0 else 1


# ----------------------------------------------------------------------------
# Point counts and torsion
# ----------------------------------------------------------------------------
def _count_points(a: Sequence[int], ell: int) -> int:
    """#E(F_ell) including the point at infinity, for a model with good reduction at ell."""
    if ell == 2:
        a1, a2, a3, a4, a6 = (x % 2 for x in a)
        affine = sum(
            1
            for x in range(2)
            for y in range(2)
            if (y * y + a1 * x * y + a3 * y - x ** 3 - a2 * x * x - a4 * x - a6) % 2 == 0
        )
        return affine + 1
    b2, b4, b6, _ = (x % ell for x in b_invariants(a))
    chi = -np.ones(ell, dtype=np.int64)
    chi[0] = 0
    xs = np.arange(ell, dtype=np.int64)
    chi[(xs * xs) % ell] = 1
    chi[0] = 0
    values = (((4 * xs % ell) * xs % ell * xs + b2 * (xs * xs % ell) + 2 * b4 * xs + b6) % ell)
    return ell + 1 + int(chi[values].sum())


def _good_model(curve: CurveRecord, ell: int) -> Ainvs:
    if curve.conductor % ell == 0:
        raise BadReduction(f"{curve.label} has bad reduction at {ell}")
    if curve.discriminant % ell:
        return curve.ainvs
    return tate_local_data(curve.ainvs, ell).minimal_model


def ap_point_count(curve: CurveRecord, ell: int) -> int:
    """a_ell = ell + 1 - #E(F_ell) at a prime of good reduction."""
    a = ell + 1 - _count_points(_good_model(curve, ell), ell)
    if a * a > 4 * ell:
        raise EngineError(f"{curve.label}: a_{ell} = {a} breaks the Hasse bound")
    return a


Point = Optional[Tuple[Fraction, Fraction]]


def _add(P: Point, Q: Point, A: int) -> Point:
    if P is None:
        return Q
    if Q is None:
        return P
    (x1, y1), (x2, y2) = P, Q
    if x1 == x2 and y1 == -y2:
        return None
    lam = (3 * x1 * x1 + A) / (2 * y1) if (x1 == x2) else (y2 - y1) / (x2 - x1)
    x3 = lam * lam - x1 - x2
    return x3, lam * (x1 - x3) - y1


def _order(P: Tuple[int, int], A: int, cap: int = 12) -> Optional[int]:
    start = (Fraction(P[0]), Fraction(P[1]))
    Q: Point = start
    for n in range(1, cap + 1):
        if Q is None:
            return n
        if Q[0].denominator != 1 or Q[1].denominator != 1:
            return None
        Q = _add(Q, start, A)
    return None


def reduction_bound(a: Sequence[int], count: int = 2) -> int:
    """gcd of #E(F_q) over the first ``count`` odd primes of good reduction."""
    delta = discriminant(a)
    bound, used = 0, 0
    for q in primerange(3, 10 ** 4):
        if delta % q == 0:
            continue
        bound = gcd(bound, _count_points(a, q))
        used += 1
        if used == count:
            break
    return bound


def _integral_points(A: int, B: int, ys: Sequence[int]) -> List[Tuple[int, int]]:
    out = []
    for y in ys:
        for root in Poly(_X ** 3 + A * _X + B - y * y, _X).ground_roots():
            if root.is_integer:
                out.append((int(root), y))
                if y:
                    out.append((int(root), -y))
    return out


def torsion_order(curve_or_ainvs) -> int:
    """|E(Q)_tors| by Lutz-Nagell on the short model, capped by the reduction bound."""
    a = curve_or_ainvs.ainvs if isinstance(curve_or_ainvs, CurveRecord) else tuple(curve_or_ainvs)
    bound = reduction_bound(a)
    if bound == 1:
        return 1
    c4, c6 = c_invariants(a)
    A, B = -27 * c4, -54 * c6
    disc = 4 * A ** 3 + 27 * B * B
    ys = [1]
    for p, e in factorint(abs(disc)).items():
        ys = [y * p ** k for y in ys for k in range(e // 2 + 1)]
    ys = [0] + sorted(ys)
    points = {P for P in _integral_points(A, B, ys) if _order(P, A) is not None}
    order = len(points) + 1
    if bound % order:
        raise EngineError(f"torsion {order} does not divide the reduction bound {bound}")
    return order


# ----------------------------------------------------------------------------
# Matching and hypothesis flags
# ----------------------------------------------------------------------------
def match_curve_to_newform(
    curve: CurveRecord, newforms: Sequence[RationalNewform], bound: Optional[int] = None
) -> Optional[RationalNewform]:
    """The unique newform whose eigenvalues agree with point counts at good primes up to ``bound``."""
    if not newforms:
        return None
    if any(f.level != curve.conductor for f in newforms):
        raise ValueError(f"{curve.label}: conductor {curve.conductor} does not match the newform level")
    N = curve.conductor
    bound = bound or sturm_bound(N)
    while True:
        primes = [ell for ell in primerange(2, bound + 1) if N % ell]
        aps = {ell: ap_point_count(curve, ell) for ell in primes}
        hits = [f for f in newforms if all(eigenvalue(f, ell) == ap for ell, ap in aps.items())]
        if len(hits) <= 1:
            return hits[0] if hits else None
        if bound >= 20 * sturm_bound(N):
            raise AmbiguousMatch(f"{curve.label} matches {[f.label for f in hits]} up to {bound}")
        bound *= 2


def frobenius_irreducible(curve: CurveRecord, p: int, search: int = 200) -> Flag:
    """PROVED when x^2 - a_l*x + l is irreducible mod p for some good l not dividing p*N."""
    for ell in primerange(2, search):
        if ell == p or curve.conductor % ell == 0:
            continue
        a = ap_point_count(curve, ell)
        disc = (a * a - 4 * ell) % p
        if disc and legendre_symbol(disc, p) == -1:
            return Flag.PROVED
    return Flag.UNKNOWN


@dataclass
class BSDReport:
    label: str
    lratio: Fraction
    torsion_order: int
    tamagawa_product: int
    c_infinity: int
    sha_analytic: Fraction
    flags: Dict[str, str] = field(default_factory=lambda: {
        "manin_assumption": "c_E = 1 assumed",
        "c_infinity_note": "power of 2; odd orders unaffected",
        "optimality": "assumed",
    })


def bsd_report(curve: CurveRecord, lratio: Fraction) -> BSDReport:
    tors = torsion_order(curve)
    tam = tamagawa_product(curve.ainvs)
    cinf = c_infinity(curve.ainvs)
    sha = Fraction(tors * tors) * lratio / (cinf * tam)
    return BSDReport(
        label=curve.label,
        lratio=lratio,
        torsion_order=tors,
        tamagawa_product=tam,
        c_infinity=cinf,
        sha_analytic=sha,
    )


def hypothesis_report(
    pair, curve_e: Optional[CurveRecord], curve_f: Optional[CurveRecord], exclusion: Optional[str] = None
) -> Dict[str, Flag]:
    """Tri-state hypothesis ledger for a congruent pair (E, F) at its prime p."""
    p, N = pair.p, pair.level
    flags: Dict[str, Flag] = {"p_odd": Flag.of(p % 2 == 1), "p2_not_dividing_N": Flag.of(N % (p * p) != 0)}
    vp = ord_p(N, p)
    flags["p_not_dividing_N"] = Flag.of(vp == 0)
    flags["irreducible_E_p"] = frobenius_irreducible(curve_e, p) if curve_e is not None else Flag.UNKNOWN
    flags["irreducible_F_p"] = frobenius_irreducible(curve_f, p) if curve_f is not None else Flag.UNKNOWN
    # multiplicity one at p: p odd and either p does not divide N, or p || N with E[p] or F[p] irreducible
    if p % 2 == 0:
        flags["multiplicity_one"] = Flag.FAILED
    elif vp == 0 or (vp == 1 and Flag.PROVED in (flags["irreducible_E_p"], flags["irreducible_F_p"])):
        flags["multiplicity_one"] = Flag.PROVED
    else:
        flags["multiplicity_one"] = Flag.UNKNOWN
    for name, curve in (("E", curve_e), ("F", curve_f)):
        if curve is None:
            flags[f"p_not_dividing_c_{name}"] = Flag.UNKNOWN
            continue
        cps = [ld.c_q for ld in local_data(curve.ainvs).values()]
        flags[f"p_not_dividing_c_{name}"] = Flag.of(all(c % p for c in cps))
    flags["p_not_dividing_torsion_F"] = Flag.UNKNOWN if curve_f is None else Flag.of(torsion_order(curve_f) % p != 0)
    flags["p_not_dividing_q_minus_1"] = Flag.of(all((q - 1) % p for q in primefactors(N)))
    flags["torsion_J_mod_F"] = Flag.NOT_CHECKED
    if exclusion is None:
        flags["no_other_congruence"] = Flag.UNKNOWN
    else:
        flags["no_other_congruence"] = Flag.PROVED if exclusion == "proved_excluded" else Flag.UNKNOWN
    return flags


def curve_file_path() -> str:
    return os.getenv("MODVIS_CURVE_FILE", os.path.join("data", "curves.jsonl"))

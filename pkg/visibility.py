"""
Visibility data for a congruent pair (f, g) at level N.

J' = J/(I_f meet I_g)J is realized on homology as ZZ^4 = H1(J, Z)/H1(B, Z)
through an integral projection P'' whose kernel is the saturated lattice
Sat(I_f H1) meet Sat(I_g H1). E' and F' are the images of the two
eigenlattices. All divisibility statements are compared at odd p only.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

from sympy.polys.matrices import DomainMatrix

from congruence import CongruentPair, ExclusionResult, excludes_other_congruences
from curves import CurveRecord, Flag, bsd_report, hypothesis_report, torsion_order
from errors import HypothesisUnverifiable, InfiniteQuotient, NotASublattice, PairDegenerate, RankNotZero
from exactlinalg import (
    IntegerLattice,
    induced_action,
    integer_left_kernel,
    integer_right_kernel,
    lattice_intersection,
    lattice_sum,
    odd_part,
    ord_p,
    plus_sublattice,
    quotient_order,
    saturate,
    solve_rows,
    to_zz,
    zz_matrix,
)
from newform import RationalNewform, analytic_rank_is_zero
from winding import cuspidal_image_order, lratio, winding_data

log = logging.getLogger(__name__)

SATISFIED = (Flag.PROVED.value, Flag.NOT_CHECKED.value, "assumed")
# hypotheses the r^2 divisibilities rest on; the rest of the ledger is informational
THEOREM_HYPOTHESES = ("p_odd", "multiplicity_one", "no_other_congruence", "manin_or_p2")


@dataclass
class JointHomology:
    f: RationalNewform
    g: RationalNewform
    HJp: IntegerLattice
    piDP: DomainMatrix
    HEp: IntegerLattice
    HFp: IntegerLattice
    HJp_plus: IntegerLattice
    HEp_plus: IntegerLattice
    HFp_plus: IntegerLattice
    star: DomainMatrix
    winding_image: IntegerLattice
    piP: DomainMatrix
    kernel_E_to_Ep: int
    kernel_F_to_Fp: int
    kernel_claim_ok: bool

    @property
    def winding_containment(self) -> bool:
        return self.HEp.contains(self.winding_image)


@dataclass
class OrdPCheck:
    name: str
    lhs: Optional[int]
    rhs: int
    passed: Optional[bool]
    conditional: bool


@dataclass
class VisibilityVerdict:
    level: int
    f: str
    g: str
    p: int
    r: int
    factor1: int
    factor2: Optional[int]
    denom: int
    lratio: Fraction
    intersection_order: int
    torsion_equal_at_r: bool
    winding_containment: bool
    kernel_claim_ok: bool
    odd_identity_ok: Optional[bool]
    odd_intersection_ok: bool
    kernel_E_to_Ep: int
    kernel_F_to_Fp: int
    conditional: bool
    exclusion: str
    flags: Dict[str, str]
    ordp_checks: List[OrdPCheck] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def hypotheses_proved(self) -> bool:
        return all(v in SATISFIED for v in self.flags.values())

    @property
    def unconditional_ok(self) -> bool:
        return self.winding_containment and self.odd_identity_ok is not False and self.kernel_claim_ok


def joint_homology(f: RationalNewform, g: RationalNewform) -> JointHomology:
    """H1(J', Z) with the images of both eigenlattices and the winding lattice."""
    if f.level != g.level or f.index == g.index:
        raise PairDegenerate(f"cannot pair {f.label} with {g.label}")
    space = f.space
    dim = space.dimension
    b = lattice_intersection(f.isotypic.image, g.isotypic.image)
    if b.rank != dim - 4:
        raise PairDegenerate(f"{f.label}, {g.label}: H1(B) has rank {b.rank}, expected {dim - 4}")
    kernel = integer_right_kernel(b.matrix()) if b.rank else [
        tuple(1 if i == j else 0 for j in range(dim)) for i in range(dim)
    ]
    piDP = zz_matrix(kernel, dim).transpose()
    HJp = IntegerLattice.full(4)

    raw_e = f.sub_lattice.image(piDP)
    raw_f = g.sub_lattice.image(piDP)
    HEp, HFp = saturate(raw_e), saturate(raw_f)

    both = f.sub_lattice.matrix().vstack(g.sub_lattice.matrix())
    star = to_zz(induced_action(both, space.star_matrix, piDP))

    data = winding_data(space)
    winding_image = data.Ie_lattice.image(piDP)

    # P = P'' * P'
    x = solve_rows(piDP.transpose(), f.quotient_map.transpose())
    if x is None:
        raise PairDegenerate(f"{f.label}: projection does not factor through J'")
    piP = to_zz(x).transpose()
    ker = IntegerLattice.from_rows(integer_left_kernel(piP), 4)
    kernel_ok = ker == HFp
    if not kernel_ok:
        log.warning("%s/%s: kernel of J' -> E is %s, expected F' %s", f.label, g.label, ker.basis, HFp.basis)

    return JointHomology(
        f=f,
        g=g,
        HJp=HJp,
        piDP=piDP,
        HEp=HEp,
        HFp=HFp,
        HJp_plus=plus_sublattice(HJp, star),
        HEp_plus=plus_sublattice(HEp, star),
        HFp_plus=plus_sublattice(HFp, star),
        star=star,
        winding_image=winding_image,
        piP=piP,
        kernel_E_to_Ep=quotient_order(HEp, raw_e),
        kernel_F_to_Fp=quotient_order(HFp, raw_f),
        kernel_claim_ok=kernel_ok,
    )


def mainform_factors(jh: JointHomology):
    """(|H1(J')^+ / (H1(F')^+ + H1(E')^+)|, |(H1(E')^+ + H1(F')^+) / (pi''(Ie) + H1(F')^+)|)."""
    if not analytic_rank_is_zero(jh.f):
        raise RankNotZero(f"{jh.f.label} has positive analytic rank")
    both = lattice_sum(jh.HEp_plus, jh.HFp_plus)
    factor1 = quotient_order(jh.HJp_plus, both)
    try:
        factor2 = quotient_order(both, lattice_sum(jh.winding_image, jh.HFp_plus))
    except (NotASublattice, InfiniteQuotient) as exc:
        log.warning("%s/%s: second factor undefined (%s)", jh.f.label, jh.g.label, exc)
        factor2 = None
    return factor1, factor2


def intersection_order(jh: JointHomology) -> int:
    """|E' meet F'| = |H1(J') / (H1(E') + H1(F'))|."""
    return quotient_order(jh.HJp, lattice_sum(jh.HEp, jh.HFp))


def torsion_equality_check(jh: JointHomology, r: int) -> bool:
    """E'[r] = F'[r] inside J'[r], as lattices (1/r)H1(E') + H1(J') and (1/r)H1(F') + H1(J')."""
    inv = Fraction(1, r)
    return lattice_sum(jh.HEp.scaled(inv), jh.HJp) == lattice_sum(jh.HFp.scaled(inv), jh.HJp)


def _ordp_check(name: str, value, p: int, k: int, conditional: bool) -> OrdPCheck:
    if value is None:
        return OrdPCheck(name, None, 2 * k, None, conditional)
    v = ord_p(value, p)
    lhs = v if v is not None else 10 ** 9
    return OrdPCheck(name, v, 2 * k, lhs >= 2 * k, conditional)


def verify_main_theorem(
    pair: CongruentPair,
    curve_e: Optional[CurveRecord] = None,
    curve_f: Optional[CurveRecord] = None,
    strict: bool = False,
) -> VisibilityVerdict:
    """Every checkable divisibility for one congruent pair, with its hypothesis ledger."""
    f, g, p, r = pair.f, pair.g, pair.p, pair.r
    k = pair.exponent
    notes: List[str] = []

    jh = joint_homology(f, g)
    factor1, factor2 = mainform_factors(jh)
    denom = cuspidal_image_order(f)
    value = lratio(f)
    inter = intersection_order(jh)
    torsion_eq = torsion_equality_check(jh, r)

    # g shares f's eigenvalues mod p away from Np, so one side suffices
    exclusion = excludes_other_congruences(f, p, also_ignore=[g])
    if exclusion is ExclusionResult.POSSIBLE_CONGRUENCE:
        msg = f"{f.label} mod {p}: congruence with another newform not excluded; unconditional checks only"
        if strict:
            raise HypothesisUnverifiable(msg)
        log.warning(msg)
        notes.append(msg)

    flags = {name: flag.value for name, flag in hypothesis_report(pair, curve_e, curve_f, exclusion.value).items()}
    flags["optimality"] = Flag.UNKNOWN.value if curve_e is None else "assumed"
    # c_E = 1 is only needed when p^2 | N
    flags["manin_or_p2"] = Flag.PROVED.value if flags["p2_not_dividing_N"] == Flag.PROVED.value else "assumed"
    conditional = not all(flags[name] in SATISFIED for name in THEOREM_HYPOTHESES)
    if flags["multiplicity_one"] != Flag.PROVED.value:
        notes.append(f"multiplicity one at {p} not established from the level and mod-{p} irreducibility")

    odd_identity = None
    if factor2 is not None:
        odd_identity = odd_part(value * denom) == odd_part(factor1 * factor2)
    odd_intersection = odd_part(factor1) == odd_part(inter)

    checks = [
        _ordp_check("factor1", factor1, p, k, conditional),
        _ordp_check("intersection_order", inter, p, k, conditional),
    ]
    if curve_e is not None:
        tors = torsion_order(curve_e)
        checks.append(_ordp_check("torsion_sq_lratio", Fraction(tors * tors) * value, p, k, conditional))
        if denom and tors % denom:
            notes.append(f"cuspidal image order {denom} does not divide torsion {tors}")
        bsd = bsd_report(curve_e, value)
        # same hypotheses as the torsion check
        checks.append(_ordp_check("sha_analytic", bsd.sha_analytic, p, k, conditional))
    else:
        checks.append(OrdPCheck("torsion_sq_lratio", None, 2 * k, None, True))

    if not jh.winding_containment:
        log.warning("%s/%s: pi''(Ie) not inside H1(E'): %s vs %s", f.label, g.label, jh.winding_image.basis, jh.HEp.basis)
    if not torsion_eq:
        log.warning("%s/%s: E'[%d] != F'[%d]; E' %s F' %s", f.label, g.label, r, r, jh.HEp.basis, jh.HFp.basis)

    return VisibilityVerdict(
        level=pair.level,
        f=f.label,
        g=g.label,
        p=p,
        r=r,
        factor1=factor1,
        factor2=factor2,
        denom=denom,
        lratio=value,
        intersection_order=inter,
        torsion_equal_at_r=torsion_eq,
        winding_containment=jh.winding_containment,
        kernel_claim_ok=jh.kernel_claim_ok,
        odd_identity_ok=odd_identity,
        odd_intersection_ok=odd_intersection,
        kernel_E_to_Ep=jh.kernel_E_to_Ep,
        kernel_F_to_Fp=jh.kernel_F_to_Fp,
        conditional=conditional,
        exclusion=exclusion.value,
        flags=flags,
        ordp_checks=checks,
        notes=notes,
    )

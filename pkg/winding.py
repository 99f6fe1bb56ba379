"""
Hecke translates of the winding element.

The annihilator ideal of (0) - (oo) is never built as a ring ideal: t kills
the cuspidal class exactly when t*e is integral, so the lattice it produces
is Te intersected with H1(X0(N), Z).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import List, Optional, Tuple

from errors import BoundExceeded, RankNotZero
from exactlinalg import (
    IntegerLattice,
    generalized_index,
    lattice_intersection,
    quotient_order,
)
from modsym import ModSymSpace, hecke_on_vector, winding_coordinates
from newform import MAX_HECKE, RationalNewform, analytic_rank_is_zero, homological_E, sturm_bound

log = logging.getLogger(__name__)

MIN_HECKE_SPAN = 30


@dataclass(frozen=True)
class WindingData:
    level: int
    e_coords: Tuple[Fraction, ...]
    cuspidal_order: int
    Te_lattice: IntegerLattice
    Ie_lattice: IntegerLattice
    hecke_bound: int


@dataclass(frozen=True)
class LRatioReport:
    label: str
    lratio: Fraction
    cuspidal_image_order: Optional[int]
    manin_assumption: str = "c_E = 1 assumed"
    denominator_guard_ok: bool = True


def _translates(space: ModSymSpace, e: Tuple[Fraction, ...], start: int, stop: int) -> List[List[Fraction]]:
    return [hecke_on_vector(space, e, n) for n in range(start, stop + 1)]


def winding_data(space: ModSymSpace) -> WindingData:
    """e, its order n modulo H1(Z), Te = span{T_n e} and Ie = Te meet H1(Z)."""
    if "winding_data" in space._memo:
        return space._memo["winding_data"]
    e = winding_coordinates(space)
    dim = space.dimension
    order = lcm(*(x.denominator for x in e)) if e else 1

    bound = max(sturm_bound(space.level), MIN_HECKE_SPAN)
    vectors = [list(e)] + _translates(space, e, 2, bound)
    te = IntegerLattice.from_rows(vectors, dim)
    while True:
        if 2 * bound > MAX_HECKE:
            raise BoundExceeded(f"level {space.level}: Te did not stabilize below T_{MAX_HECKE}")
        vectors += _translates(space, e, bound + 1, 2 * bound)
        doubled = IntegerLattice.from_rows(vectors, dim)
        if doubled == te:
            break
        log.debug("level %d: Te grew between T_%d and T_%d", space.level, bound, 2 * bound)
        te, bound = doubled, 2 * bound

    ie = lattice_intersection(te, IntegerLattice.full(dim))
    data = WindingData(
        level=space.level,
        e_coords=tuple(e),
        cuspidal_order=order,
        Te_lattice=te,
        Ie_lattice=ie,
        hecke_bound=bound,
    )
    space._memo["winding_data"] = data
    return data


def lratio(f: RationalNewform, data: Optional[WindingData] = None) -> Fraction:
    """[H1(E, Z)^+ : pi_*(Te)], or 0 when pi_*(Te) collapses (L(f, 1) = 0)."""
    data = data or winding_data(f.space)
    image = data.Te_lattice.image(f.quotient_map)
    if image.rank == 0:
        return Fraction(0)
    value = generalized_index(homological_E(f).plus, image)
    if (data.cuspidal_order ** 2) % value.denominator:
        log.warning("%s: L-ratio %s has denominator outside n^2 = %d", f.label, value, data.cuspidal_order ** 2)
    return value


def cuspidal_image_order(f: RationalNewform, data: Optional[WindingData] = None) -> int:
    """|pi_*(Te) / pi_*(Ie)|."""
    data = data or winding_data(f.space)
    if not analytic_rank_is_zero(f):
        raise RankNotZero(f"{f.label} has positive analytic rank")
    return quotient_order(data.Te_lattice.image(f.quotient_map), data.Ie_lattice.image(f.quotient_map))


def lratio_report(f: RationalNewform, data: Optional[WindingData] = None) -> LRatioReport:
    data = data or winding_data(f.space)
    value = lratio(f, data)
    cio = cuspidal_image_order(f, data) if value else None
    return LRatioReport(
        label=f.label,
        lratio=value,
        cuspidal_image_order=cio,
        denominator_guard_ok=value == 0 or (data.cuspidal_order ** 2) % value.denominator == 0,
    )

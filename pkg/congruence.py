from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from math import gcd
from typing import Dict, List, Optional, Sequence, Tuple

from sympy import divisors, isprime, multiplicity, primerange

from errors import BoundExceeded, PairDegenerate
from exactlinalg import IntegerLattice, lattice_intersection, mod_p_nullity
from modsym import ModSymSpace, genus_x0, hecke_matrix
from newform import (
    RationalNewform,
    analytic_rank_is_zero,
    eigenvalue,
    good_primes,
    minus_scalar,
    new_subspace,
    rational_newforms,
    restrict,
    sturm_bound,
)
from space_cache import get_space

log = logging.getLogger(__name__)

DEFAULT_SAFETY = 3

__all__ = [
    "CongruentPair",
    "DEFAULT_SAFETY",
    "ExclusionResult",
    "congruence_power",
    "excludes_other_congruences",
    "find_visible_pairs",
    "sturm_bound",
]


class ExclusionResult(str, Enum):
    PROVED_EXCLUDED = "proved_excluded"
    POSSIBLE_CONGRUENCE = "possible_congruence"


@dataclass(frozen=True)
class CongruentPair:
    f: RationalNewform
    g: RationalNewform
    p: int
    r: int
    index_bound: int
    safety: int = DEFAULT_SAFETY

    @property
    def level(self) -> int:
        return self.f.level

    @property
    def rank_profile(self) -> Tuple[str, str]:
        return ("zero", "positive")

    @property
    def exponent(self) -> int:
        return multiplicity(self.p, self.r)


def _check_pair(f: RationalNewform, g: RationalNewform) -> None:
    if f.level != g.level:
        raise PairDegenerate(f"{f.label} and {g.label} have different levels")
    if f.index == g.index:
        raise PairDegenerate(f"{f.label} paired with itself")


def congruence_power(f: RationalNewform, g: RationalNewform, p: int, safety: int = DEFAULT_SAFETY) -> Optional[int]:
    """
    Largest power of p dividing a_l(f) - a_l(g) for every prime l not dividing
    N*p up to safety * sturm_bound(N); None when that power is 1.
    """
    _check_pair(f, g)
    if p == 2 or not isprime(p):
        raise ValueError(f"p must be an odd prime, got {p}")
    bound = safety * sturm_bound(f.level)
    d = 0
    for ell in good_primes(f.level, bound, avoid=p):
        d = gcd(d, eigenvalue(f, ell) - eigenvalue(g, ell))
    if d == 0:
        raise BoundExceeded(f"{f.label} and {g.label} agree at every prime up to {bound}")
    k = multiplicity(p, d)
    return p ** k if k else None


def find_visible_pairs(
    space: ModSymSpace,
    p_max: int,
    safety: int = DEFAULT_SAFETY,
    forms: Optional[Sequence[RationalNewform]] = None,
) -> List[CongruentPair]:
    """Pairs (f of analytic rank zero, g with L(g, 1) = 0) congruent modulo an odd prime p <= p_max."""
    forms = list(forms) if forms is not None else rational_newforms(space)
    rank_zero: Dict[int, bool] = {f.index: analytic_rank_is_zero(f) for f in forms}
    bound = safety * sturm_bound(space.level)
    pairs = []
    for f in forms:
        if not rank_zero[f.index]:
            continue
        for g in forms:
            if rank_zero[g.index]:
                continue
            for p in primerange(3, p_max + 1):
                r = congruence_power(f, g, p, safety)
                if r is not None:
                    log.info("level %d: %s ~ %s mod %d (r = %d)", space.level, f.label, g.label, p, r)
                    pairs.append(CongruentPair(f=f, g=g, p=p, r=r, index_bound=bound, safety=safety))
    return pairs


def _complement(lat: IntegerLattice, forms: Sequence[RationalNewform]) -> IntegerLattice:
    for h in forms:
        lat = lattice_intersection(lat, h.isotypic.image)
    return lat


def excludes_other_congruences(
    f: RationalNewform,
    p: int,
    also_ignore: Sequence[RationalNewform] = (),
) -> ExclusionResult:
    """
    One-sided test: proved_excluded when, at every level M | N, the new space
    (without f, and without ``also_ignore``, at M = N) has no common mod-p
    eigenvector for T_l - a_l(f), l prime, l not dividing N*p, l <= sturm_bound(N).
    """
    N = f.level
    primes = good_primes(N, sturm_bound(N), avoid=p)
    for M in divisors(N):
        if genus_x0(M) == 0:
            continue
        space = f.space if M == N else get_space(M)
        lat = new_subspace(space)
        if M == N:
            lat = _complement(lat, [f, *also_ignore])
        if lat.rank == 0:
            continue
        if not primes:
            return ExclusionResult.POSSIBLE_CONGRUENCE
        basis = lat.matrix()
        blocks = [minus_scalar(restrict(basis, hecke_matrix(space, ell)), eigenvalue(f, ell)) for ell in primes]
        stacked = blocks[0].hstack(*blocks[1:])
        nullity = mod_p_nullity(stacked, p)
        if nullity:
            log.debug("%s mod %d: eigenspace of dimension %d at level %d", f.label, p, nullity, M)
            return ExclusionResult.POSSIBLE_CONGRUENCE
    return ExclusionResult.PROVED_EXCLUDED

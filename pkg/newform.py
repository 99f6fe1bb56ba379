"""
Rational newforms as lattice data on H1(X0(N), Z).

A rational newform f is stored through its eigenvalues and two lattices:
the saturated rank-2 kernel H1[I_f] (homology of the dual curve sitting
inside the Jacobian) and the projection P with kernel Sat(I_f * H1), whose
image ZZ^2 is the homology of the optimal quotient curve.
"""
from __future__ import annotations

import logging
import os
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from sympy import ZZ, primefactors, primerange
from sympy.polys.matrices import DomainMatrix

from errors import BoundExceeded, EngineError
from exactlinalg import (
    IntegerLattice,
    clear_denominators,
    frac_rows,
    induced_action,
    integer_left_kernel,
    integer_right_kernel,
    plus_sublattice,
    qq_matrix,
    quotient_order,
    saturate,
    solve_rows,
    to_qq,
    to_zz,
    zz_matrix,
)
from modsym import (
    ModSymSpace,
    degeneracy_matrix,
    genus_x0,
    hecke_matrix,
    hecke_on_vector,
    pone_size,
    winding_coordinates,
)
from space_cache import get_space

log = logging.getLogger(__name__)

EIGEN_BOUND = int(os.getenv("MODVIS_EIGEN_BOUND", "50"))
MAX_HECKE = int(os.getenv("MODVIS_MAX_HECKE", "2000"))
SEARCH_ATTEMPTS = 6


def sturm_bound(N: int) -> int:
    """ceil(mu/6) with mu the index of Gamma0(N) in SL2(Z)."""
    return -(-pone_size(N) // 6)


@dataclass
class IsotypicData:
    generators: Tuple[Tuple[int, int], ...]
    kernel: IntegerLattice
    image: IntegerLattice


@dataclass
class EllipticHomology:
    lattice: IntegerLattice
    plus: IntegerLattice
    star: DomainMatrix
    projection: DomainMatrix


@dataclass
class RationalNewform:
    level: int
    index: int
    eigenvalues: Dict[int, int]
    sub_lattice: IntegerLattice
    quotient_map: DomainMatrix
    isotypic: IsotypicData
    atkin_lehner_sign: Optional[int] = None
    space: Optional[ModSymSpace] = field(default=None, repr=False, compare=False)

    @property
    def label(self) -> str:
        return f"{self.level}.{self.index}"


# ----------------------------------------------------------------------------
# Restriction helpers
# ----------------------------------------------------------------------------
def minus_scalar(op: DomainMatrix, lam: int) -> DomainMatrix:
    k = op.shape[0]
    return to_zz(op) - zz_matrix([[lam if i == j else 0 for j in range(k)] for i in range(k)], k)


def restrict(basis: DomainMatrix, op: DomainMatrix) -> DomainMatrix:
    """Matrix of ``op`` on the row lattice ``basis`` (which must be op-stable)."""
    x = solve_rows(basis, to_qq(basis) * to_qq(op))
    if x is None:
        raise EngineError("lattice is not stable under the operator")
    return to_zz(x)


def good_primes(N: int, bound: int, avoid: int = 1) -> List[int]:
    return [ell for ell in primerange(2, bound + 1) if N % ell and avoid % ell]


# ----------------------------------------------------------------------------
# New subspace
# ----------------------------------------------------------------------------
def new_subspace(space: ModSymSpace) -> IntegerLattice:
    """Intersection of the kernels of both degeneracy maps to every level N/q of positive genus."""
    N, dim = space.level, space.dimension
    if dim == 0:
        return IntegerLattice.zero(0)
    maps = []
    for q in primefactors(N):
        M = N // q
        if genus_x0(M) == 0:
            continue
        target = get_space(M)
        for t in (1, q):
            maps.append(degeneracy_matrix(space, target, t))
    if not maps:
        return IntegerLattice.full(dim)
    stacked = maps[0].hstack(*maps[1:])
    _, rows = clear_denominators(frac_rows(stacked))
    kernel = integer_left_kernel(zz_matrix(rows, stacked.shape[1]))
    log.debug("level %d: new subspace of rank %d in %d", N, len(kernel), dim)
    return IntegerLattice.from_rows(kernel, dim)


# ----------------------------------------------------------------------------
# Eigensystem search
# ----------------------------------------------------------------------------
def _linear_roots(op: DomainMatrix) -> List[Tuple[int, int]]:
    out = []
    for coeffs, mult in op.charpoly_factor_list():
        if len(coeffs) != 2:
            continue
        lead, const = int(coeffs[0]), int(coeffs[1])
        if const % lead == 0:
            out.append((-const // lead, mult))
    return out


def _eigenvalue_of(space: ModSymSpace, rows: Sequence[Sequence[Fraction]], ell: int) -> Optional[int]:
    """Common integer eigenvalue of T_ell on ``rows``, or None."""
    lam = None
    for v in rows:
        image = hecke_on_vector(space, v, ell)
        i = next(i for i, x in enumerate(v) if x)
        mu = image[i] / v[i]
        if mu.denominator != 1 or any(image[j] != mu * v[j] for j in range(len(v))):
            return None
        if lam is not None and mu != lam:
            return None
        lam = mu
    return int(lam)


def _verified(space: ModSymSpace, lat: IntegerLattice, bound: int) -> Optional[Dict[int, int]]:
    eig: Dict[int, int] = {}
    rows = lat.rows()
    for ell in primerange(2, bound + 1):
        a = _eigenvalue_of(space, rows, ell)
        if a is None:
            return None
        eig[ell] = a
    return eig


def _split_by_combination(space: ModSymSpace, new: IntegerLattice, rng: random.Random) -> Optional[List[IntegerLattice]]:
    """Rank-2 eigenlattices of a random combination of Hecke operators; None when the combination does not separate them."""
    N = space.level
    basis = new.matrix()
    primes = good_primes(N, max(sturm_bound(N), 13))[:4]
    combo = None
    for ell in primes:
        c = rng.randint(-5, 5) or 1
        term = restrict(basis, hecke_matrix(space, ell))
        combo = term * ZZ(c) if combo is None else combo + term * ZZ(c)
    if combo is None:
        return None
    out = []
    for lam, mult in _linear_roots(combo):
        kernel = integer_left_kernel(minus_scalar(combo, lam))
        if mult != 2 or len(kernel) != 2:
            log.debug("level %d: eigenvalue %d of the combination has multiplicity %d, kernel rank %d", N, lam, mult, len(kernel))
            return None
        out.append(IntegerLattice.from_rows(frac_rows(qq_matrix(kernel, new.rank) * basis), space.dimension))
    return out


def _split_iteratively(space: ModSymSpace, new: IntegerLattice) -> List[IntegerLattice]:
    """Refine by one good prime at a time, keeping only rational eigenvalues."""
    N = space.level
    pieces = [new]
    for ell in good_primes(N, max(4 * sturm_bound(N), 50)):
        if all(p.rank <= 2 for p in pieces):
            break
        refined = []
        for piece in pieces:
            if piece.rank <= 2:
                refined.append(piece)
                continue
            basis = piece.matrix()
            op = restrict(basis, hecke_matrix(space, ell))
            for lam, _ in _linear_roots(op):
                kernel = integer_left_kernel(minus_scalar(op, lam))
                refined.append(IntegerLattice.from_rows(frac_rows(qq_matrix(kernel, piece.rank) * basis), space.dimension))
        pieces = refined
        log.debug("level %d: split by T_%d into ranks %s", N, ell, [p.rank for p in pieces])
    return [p for p in pieces if p.rank == 2]


def _isotypic(space: ModSymSpace, sub: IntegerLattice, eig: Dict[int, int]) -> IsotypicData:
    N, dim = space.level, space.dimension
    gens = tuple((ell, eig[ell]) for ell in primerange(2, sturm_bound(N) + 1))
    images: List[List[Fraction]] = []
    kernel_cols = []
    for ell, a in gens:
        op = minus_scalar(hecke_matrix(space, ell), a)
        images.extend(frac_rows(op))
        kernel_cols.append(op)
    image = saturate(IntegerLattice.from_rows(images, dim))
    stacked = kernel_cols[0].hstack(*kernel_cols[1:]) if kernel_cols else DomainMatrix.zeros((dim, 0), ZZ)
    kernel = IntegerLattice.from_rows(integer_left_kernel(stacked), dim)
    if kernel != sub:
        raise EngineError(f"level {N}: eigenlattice differs from the kernel of the ideal")
    if image.rank != dim - 2:
        raise EngineError(f"level {N}: ideal image has rank {image.rank}, expected {dim - 2}")
    return IsotypicData(generators=gens, kernel=kernel, image=image)


def atkin_lehner_sign(N: int, eig: Dict[int, int]) -> Optional[int]:
    """Global sign w_N = prod(-a_q) over q || N; None when some q^2 | N."""
    sign = 1
    for q in primefactors(N):
        if N % (q * q) == 0:
            return None
        if q not in eig:
            raise EngineError(f"level {N}: a_{q} is needed for the Atkin-Lehner sign")
        sign *= -eig[q]
    return sign


def _bad_prime_eigenvalues(space: ModSymSpace, sub: IntegerLattice, eig: Dict[int, int]) -> None:
    """U_q eigenvalues for q | N beyond the stored bound."""
    rows = sub.rows()
    for q in primefactors(space.level):
        if q not in eig:
            a = _eigenvalue_of(space, rows, q)
            if a is None:
                raise EngineError(f"level {space.level}: U_{q} is not scalar on the eigenlattice")
            eig[q] = a


def _build(space: ModSymSpace, sub: IntegerLattice, eig: Dict[int, int], index: int) -> RationalNewform:
    iso = _isotypic(space, sub, eig)
    _bad_prime_eigenvalues(space, sub, eig)
    proj = integer_right_kernel(iso.image.matrix() if iso.image.rank else DomainMatrix.zeros((0, space.dimension), ZZ))
    quotient_map = zz_matrix(proj, space.dimension).transpose()
    return RationalNewform(
        level=space.level,
        index=index,
        eigenvalues=eig,
        sub_lattice=sub,
        quotient_map=quotient_map,
        isotypic=iso,
        atkin_lehner_sign=atkin_lehner_sign(space.level, eig),
        space=space,
    )


def rational_newforms(space: ModSymSpace, bound: Optional[int] = None) -> List[RationalNewform]:
    """Every new eigensystem with integer eigenvalues, ordered by (a_2, a_3, a_5, ...)."""
    N = space.level
    if space.genus == 0:
        return []
    new = new_subspace(space)
    if new.rank == 0:
        return []
    bound = max(sturm_bound(N), bound if bound is not None else EIGEN_BOUND)
    rng = random.Random(N)
    found: Optional[List[Tuple[IntegerLattice, Dict[int, int]]]] = None
    for attempt in range(SEARCH_ATTEMPTS):
        candidates = _split_by_combination(space, new, rng)
        if candidates is None:
            log.debug("level %d: combination attempt %d merged eigensystems, redrawing", N, attempt)
            continue
        systems = [(lat, _verified(space, lat, bound)) for lat in candidates]
        if all(eig is not None for _, eig in systems):
            found = systems
            break
        log.debug("level %d: combination attempt %d failed verification", N, attempt)
    if found is None:
        found = [(lat, eig) for lat in _split_iteratively(space, new) for eig in [_verified(space, lat, bound)] if eig]
    found.sort(key=lambda item: [item[1][ell] for ell in sorted(item[1])])
    forms = [_build(space, lat, eig, i + 1) for i, (lat, eig) in enumerate(found)]
    for f in forms:
        check_ramanujan(f)
    log.info("level %d: %d rational newform(s)", N, len(forms))
    return forms


def check_ramanujan(f: RationalNewform) -> None:
    for ell, a in f.eigenvalues.items():
        if f.level % ell:
            if a * a > 4 * ell:
                raise EngineError(f"{f.label}: a_{ell} = {a} violates the Ramanujan bound")
        elif a not in (-1, 0, 1):
            raise EngineError(f"{f.label}: a_{ell} = {a} at a bad prime")


# ----------------------------------------------------------------------------
# Per-form operations
# ----------------------------------------------------------------------------
def eigenvalue(f: RationalNewform, ell: int) -> int:
    if ell == 1:
        return 1
    if ell in f.eigenvalues:
        return f.eigenvalues[ell]
    if ell > MAX_HECKE:
        raise BoundExceeded(f"T_{ell} exceeds the Hecke budget {MAX_HECKE}")
    a = _eigenvalue_of(f.space, f.sub_lattice.rows(), ell)
    if a is None:
        raise EngineError(f"{f.label}: T_{ell} is not scalar on the eigenlattice")
    f.eigenvalues[ell] = a
    return a


def fourier_coefficients(f: RationalNewform, n_max: int) -> List[int]:
    """a_1 .. a_{n_max} from the prime eigenvalues by multiplicativity."""
    a = [0] * (n_max + 1)
    if n_max >= 1:
        a[1] = 1
    for n in range(2, n_max + 1):
        p = primefactors(n)[0]
        m, k = n, 0
        while m % p == 0:
            m //= p
            k += 1
        if m > 1:
            a[n] = a[p ** k] * a[m]
            continue
        ap = eigenvalue(f, p)
        if k == 1:
            a[n] = ap
        elif f.level % p == 0:
            a[n] = ap * a[n // p]
        else:
            a[n] = ap * a[n // p] - p * a[n // (p * p)]
    return a[1:]


def analytic_rank_is_zero(f: RationalNewform) -> bool:
    """True iff the winding element projects nontrivially onto the f-component."""
    e = winding_coordinates(f.space)
    image = frac_rows(qq_matrix([e], len(e)) * to_qq(f.quotient_map))[0]
    return any(image)


def homological_E(f: RationalNewform) -> EllipticHomology:
    """H1(E, Z) = ZZ^2 with its star action and plus part."""
    space = f.space
    star = induced_action(f.sub_lattice.matrix(), space.star_matrix, f.quotient_map)
    star = to_zz(star)
    lattice = IntegerLattice.full(2)
    return EllipticHomology(
        lattice=lattice,
        plus=plus_sublattice(lattice, star),
        star=star,
        projection=f.quotient_map,
    )


def modular_degree_index(f: RationalNewform) -> int:
    """[H1(E, Z) : pi_*(H1[I_f])], finite by construction."""
    image = f.sub_lattice.image(f.quotient_map)
    return quotient_order(IntegerLattice.full(2), image)


def root_number(f: RationalNewform) -> Optional[int]:
    return None if f.atkin_lehner_sign is None else -f.atkin_lehner_sign


def distinct_systems(forms: Sequence[RationalNewform]) -> bool:
    bound = sturm_bound(forms[0].level) if forms else 0
    seen = set()
    for f in forms:
        key = tuple(f.eigenvalues[ell] for ell in primerange(2, bound + 1))
        if key in seen:
            return False
        seen.add(key)
    return True
"""
Weight-2 modular symbols for Gamma0(N).

Conventions (fixed here, every test pins to them):

* a Manin symbol (c:d) is the path g{0, oo} = {b/d, a/c} for any
  g = [[a, b], [c, d]] in SL2(Z) with bottom row congruent to (c, d);
* matrices act on the right: (c:d)*[[p, q], [r, s]] = (c*p + d*r : c*q + d*s);
* sigma = [[0, -1], [1, 0]] and tau = [[0, -1], [1, -1]] give the relations
  x + x*sigma = 0 and x + x*tau + x*tau^2 = 0;
* the star involution is the right action of [[-1, 0], [0, 1]], i.e.
  (c:d) -> (-c:d), which fixes {0, oo};
* operators act on row vectors: v -> v*T, and row i of T is the image of
  basis vector i.

Raw coordinates are coordinates on the free generators of the relation
quotient (the full space of modular symbols, Eisenstein part included).
Cuspidal coordinates are coordinates on the canonical basis of
H1(X0(N), Z), so the integral lattice is ZZ^(2g) itself.
"""
from __future__ import annotations

import logging
import os
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from sympy import QQ, Rational, ZZ, divisors, isprime, nextprime, primefactors, totient
from sympy.core.intfunc import igcdex
from sympy.ntheory.continued_fraction import (
    continued_fraction_convergents,
    continued_fraction_iterator,
)
from sympy.polys.matrices import DomainMatrix

from errors import EngineError, GenusZero, LevelTooLarge
from exactlinalg import (
    IntegerLattice,
    frac_rows,
    integer_left_kernel,
    pivot_columns,
    plus_sublattice,
    qq_matrix,
    solve_rows,
    to_zz,
    zz_matrix,
)

log = logging.getLogger(__name__)

SIGMA = (0, -1, 1, 0)
TAU = (0, -1, 1, -1)
STAR = (-1, 0, 0, 1)

Sparse = Dict[int, Fraction]


def _max_symbols() -> int:
    return int(os.getenv("MODVIS_MAX_DIM", "4000"))


# ----------------------------------------------------------------------------
# P^1(Z/N)
# ----------------------------------------------------------------------------
@dataclass(frozen=True, order=True)
class ManinSymbol:
    c: int
    d: int

    def act(self, mat: Tuple[int, int, int, int]) -> Tuple[int, int]:
        p, q, r, s = mat
        return self.c * p + self.d * r, self.c * q + self.d * s


class ProjectiveLine:
    """
    Canonical representatives of P^1(Z/N): (0:1), (1:v), or (g:v) with g a
    proper divisor of N and v minimal under units congruent to 1 mod N/g.
    """

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("level must be positive")
        self.N = N
        self._memo: Dict[Tuple[int, int], Optional[ManinSymbol]] = {}
        reps = set()
        for g in divisors(N):
            for v in range(N):
                sym = self.reduce(g, v)
                if sym is not None:
                    reps.add(sym)
        self.symbols: List[ManinSymbol] = sorted(reps)
        self._index = {s: i for i, s in enumerate(self.symbols)}

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[ManinSymbol]:
        return iter(self.symbols)

    def reduce(self, u: int, v: int) -> Optional[ManinSymbol]:
        N = self.N
        key = (u % N, v % N)
        if key in self._memo:
            return self._memo[key]
        u, v = key
        out: Optional[ManinSymbol]
        if gcd(gcd(u, v), N) != 1:
            out = None
        elif u == 0:
            out = ManinSymbol(0, 1 % N if N > 1 else 1)
        else:
            g = gcd(u, N)
            m = N // g
            # scale by a unit t with t*u = g mod N
            t = pow(u // g, -1, m) if m > 1 else 1
            while gcd(t, N) != 1:
                t += m
            v = (t * v) % N
            if g > 1:
                v = min((v * s) % N for s in range(1, N, m) if gcd(s, N) == 1)
            out = ManinSymbol(g, v)
        self._memo[key] = out
        return out

    def index(self, u: int, v: int) -> Optional[int]:
        sym = self.reduce(u, v)
        return None if sym is None else self._index[sym]


def pone_size(N: int) -> int:
    """|P^1(Z/N)| = N * prod_{q | N} (1 + 1/q)."""
    out = Fraction(N)
    for q in primefactors(N):
        out *= Fraction(q + 1, q)
    return int(out)


def genus_x0(N: int) -> int:
    """Genus of X0(N) from the classical index / elliptic point / cusp count."""
    mu = pone_size(N)
    primes = primefactors(N)
    if N % 4 == 0:
        nu2 = 0
    else:
        nu2 = 1
        for p in primes:
            if p % 2:
                nu2 *= 2 if p % 4 == 1 else 0
    if N % 9 == 0:
        nu3 = 0
    else:
        nu3 = 1
        for p in primes:
            if p == 2:
                nu3 = 0
            elif p != 3:
                nu3 *= 2 if p % 3 == 1 else 0
    cusps = sum(int(totient(gcd(d, N // d))) for d in divisors(N))
    g = 1 + Fraction(mu, 12) - Fraction(nu2, 4) - Fraction(nu3, 3) - Fraction(cusps, 2)
    return int(g)


def heilbronn_merel(n: int) -> Iterator[Tuple[int, int, int, int]]:
    """Merel's set: a > b >= 0, d > c >= 0, ad - bc = n."""
    for a in range(1, n + 1):
        for d in range((n + a - 1) // a, n + 2 - a):
            bc = a * d - n
            if bc == 0:
                for b in range(a):
                    yield a, b, 0, d
                for c in range(1, d):
                    yield a, 0, c, d
            else:
                for b in range((bc - 1) // (d - 1) + 1, a):
                    if bc % b == 0:
                        yield a, b, bc // b, d


# ----------------------------------------------------------------------------
# Cusps
# ----------------------------------------------------------------------------
def _cusp_equivalent(N: int, x: Tuple[int, int], y: Tuple[int, int]) -> bool:
    (u1, v1), (u2, v2) = x, y
    s1 = int(igcdex(u1, v1)[0])
    s2 = int(igcdex(u2, v2)[0])
    return (s1 * v2 - s2 * v1) % gcd(N, v1 * v2) == 0


def lift_symbol(sym: ManinSymbol) -> Tuple[int, int, int, int]:
    """(a, b, c, d) in SL2(Z) with bottom row (c, d)."""
    c, d = sym.c, sym.d
    x, y, g = igcdex(d, c)
    if g != 1:
        raise EngineError(f"non-coprime representative {sym}")
    return int(x), -int(y), int(c), int(d)


# ----------------------------------------------------------------------------
# The space
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class ModSymSpace:
    level: int
    symbols: Tuple[ManinSymbol, ...]
    free_generators: Tuple[int, ...]
    relation_table: Tuple[Tuple[Tuple[int, Fraction], ...], ...]
    cusps: Tuple[Tuple[int, int], ...]
    boundary_data: Tuple[Tuple[Tuple[int, int], ...], ...]
    cuspidal_basis: Tuple[Tuple[Fraction, ...], ...]
    star_rows: Tuple[Tuple[int, ...], ...]
    _memo: Dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def dimension(self) -> int:
        return len(self.cuspidal_basis)

    @property
    def genus(self) -> int:
        return self.dimension // 2

    @property
    def raw_dimension(self) -> int:
        return len(self.free_generators)

    @property
    def star_matrix(self) -> DomainMatrix:
        return zz_matrix(self.star_rows, self.dimension)

    @property
    def integral_lattice(self) -> IntegerLattice:
        return IntegerLattice.full(self.dimension)

    @property
    def p1(self) -> ProjectiveLine:
        if "p1" not in self._memo:
            self._memo["p1"] = ProjectiveLine(self.level)
        return self._memo["p1"]

    def symbol_coords(self, u: int, v: int) -> Sparse:
        i = self.p1.index(u, v)
        return {} if i is None else dict(self.relation_table[i])

    def hecke_cache(self) -> Dict[int, DomainMatrix]:
        return self._memo.setdefault("hecke", {})


def _add(acc: Dict[int, Fraction], vec, coeff=1) -> None:
    items = vec.items() if isinstance(vec, dict) else vec
    for k, x in items:
        acc[k] = acc.get(k, 0) + coeff * x
        if acc[k] == 0:
            del acc[k]


def _dense(vec: Sparse, n: int) -> List[Fraction]:
    out = [Fraction(0)] * n
    for k, x in vec.items():
        out[k] = Fraction(x)
    return out


def _relation_quotient(p1: ProjectiveLine):
    """Solve the sigma and tau relations; returns (free symbol indices, table)."""
    n = len(p1)
    syms = p1.symbols
    two: List[Tuple[int, int]] = [(-1, 0)] * n
    done = [False] * n
    gens2: List[int] = []
    for i, s in enumerate(syms):
        if done[i]:
            continue
        j = p1.index(*s.act(SIGMA))
        done[i] = done[j] = True
        if j == i:
            continue  # 2x = 0
        k = len(gens2)
        gens2.append(i)
        two[i], two[j] = (k, 1), (k, -1)

    rels: List[Dict[int, int]] = []
    seen = [False] * n
    for i, s in enumerate(syms):
        if seen[i]:
            continue
        j = p1.index(*s.act(TAU))
        k = p1.index(*syms[j].act(TAU))
        row: Dict[int, int] = defaultdict(int)
        for t in (i, j, k):
            seen[t] = True
            g, sign = two[t]
            if sign:
                row[g] += sign
        row = {g: x for g, x in row.items() if x}
        if row:
            rels.append(row)

    ng = len(gens2)
    if rels and ng:
        m = qq_matrix([[r.get(g, 0) for g in range(ng)] for r in rels], ng)
        red, pivots = m.rref()
        red_rows = frac_rows(red)
    else:
        pivots, red_rows = (), []
    pivot_row = {c: r for r, c in enumerate(pivots)}
    free_cols = [g for g in range(ng) if g not in pivot_row]
    position = {g: i for i, g in enumerate(free_cols)}

    def express(g: int) -> Sparse:
        if g in position:
            return {position[g]: Fraction(1)}
        row = red_rows[pivot_row[g]]
        return {position[h]: -row[h] for h in free_cols if row[h]}

    gen_expr = [express(g) for g in range(ng)]
    table = []
    for i in range(n):
        g, sign = two[i]
        if not sign:
            table.append(())
        else:
            table.append(tuple(sorted((k, sign * x) for k, x in gen_expr[g].items())))
    return tuple(gens2[g] for g in free_cols), tuple(table)


def _boundary(p1: ProjectiveLine):
    N = p1.N
    cusps: List[Tuple[int, int]] = []

    def cusp_index(u: int, v: int) -> int:
        g = gcd(u, v)
        u, v = u // g, v // g
        for i, c in enumerate(cusps):
            if _cusp_equivalent(N, c, (u, v)):
                return i
        cusps.append((u, v))
        return len(cusps) - 1

    data = []
    for s in p1.symbols:
        a, b, c, d = lift_symbol(s)
        acc: Dict[int, int] = {}
        _add(acc, {cusp_index(a, c): 1})
        _add(acc, {cusp_index(b, d): 1}, -1)
        data.append(tuple(sorted(acc.items())))
    return tuple(cusps), tuple(data)


def build_space(N: int) -> ModSymSpace:
    """Manin-symbol presentation of H1(X0(N), Z) with its star involution."""
    if N < 1:
        raise ValueError("level must be positive")
    p1 = ProjectiveLine(N)
    if len(p1) > _max_symbols():
        raise LevelTooLarge(f"level {N}: {len(p1)} Manin symbols exceed budget {_max_symbols()}")
    free, table = _relation_quotient(p1)
    cusps, bdata = _boundary(p1)
    m = len(free)
    log.debug("level %d: %d symbols, %d free generators, %d cusps", N, len(p1), m, len(cusps))

    basis_rows: Tuple[Tuple[Fraction, ...], ...] = ()
    if m:
        # lattice of integral Manin symbols, then the boundary kernel inside it
        symbols_lat = IntegerLattice.from_rows([_dense(dict(t), m) for t in table if t], m)
        delta = zz_matrix([_dense(dict(bdata[i]), len(cusps)) for i in free], len(cusps))
        b = symbols_lat.matrix()
        delta_b = to_zz(b * delta.convert_to(QQ))
        z = integer_left_kernel(delta_b)
        if z:
            h1 = IntegerLattice.from_rows(frac_rows(qq_matrix(z, m) * b), m)
            basis_rows = tuple(tuple(r) for r in h1.rows())

    g = genus_x0(N)
    if len(basis_rows) != 2 * g:
        raise EngineError(f"level {N}: cuspidal rank {len(basis_rows)} != 2*genus {2 * g}")

    space = ModSymSpace(
        level=N,
        symbols=tuple(p1.symbols),
        free_generators=free,
        relation_table=table,
        cusps=cusps,
        boundary_data=bdata,
        cuspidal_basis=basis_rows,
        star_rows=(),
    )
    space._memo["p1"] = p1
    if g:
        star = _operator(space, [STAR])
        object.__setattr__(space, "star_rows", tuple(tuple(r) for r in star))
    return space


# ----------------------------------------------------------------------------
# Coordinates and operators
# ----------------------------------------------------------------------------
def _solver(space: ModSymSpace):
    if "solver" not in space._memo:
        k = qq_matrix(space.cuspidal_basis, space.raw_dimension)
        piv = list(pivot_columns(k))
        inv = k.extract(list(range(space.dimension)), piv).inv()
        space._memo["solver"] = (piv, inv)
    return space._memo["solver"]


def to_cuspidal(space: ModSymSpace, vec: Sparse, check: bool = False) -> List[Fraction]:
    """Cuspidal coordinates of a raw vector lying in the cuspidal subspace."""
    if space.dimension == 0:
        return []
    piv, inv = _solver(space)
    out = frac_rows(qq_matrix([[vec.get(p, 0) for p in piv]], len(piv)) * inv)[0]
    if check:
        back: Dict[int, Fraction] = {}
        for c, row in zip(out, space.cuspidal_basis):
            _add(back, {j: x for j, x in enumerate(row) if x}, c)
        if back != {k: x for k, x in vec.items() if x}:
            raise EngineError("vector is not cuspidal")
    return out


def from_cuspidal(space: ModSymSpace, coords: Sequence) -> Sparse:
    out: Dict[int, Fraction] = {}
    for c, row in zip(coords, space.cuspidal_basis):
        if c:
            _add(out, {j: x for j, x in enumerate(row) if x}, Fraction(c))
    return out


def _raw_images(space: ModSymSpace, mats, gens: Sequence[int]) -> Dict[int, Sparse]:
    """Images of the free generators ``gens`` under sum_{m in mats} x*m."""
    p1, out = space.p1, {}
    for j in gens:
        sym = space.symbols[space.free_generators[j]]
        acc: Dict[int, Fraction] = {}
        for m in mats:
            i = p1.index(*sym.act(m))
            if i is not None:
                _add(acc, space.relation_table[i])
        out[j] = acc
    return out


def _support(space: ModSymSpace) -> List[int]:
    return sorted({j for row in space.cuspidal_basis for j, x in enumerate(row) if x})


def _operator(space: ModSymSpace, mats) -> List[List[int]]:
    mats = list(mats)
    images = _raw_images(space, mats, _support(space))
    rows = []
    for row in space.cuspidal_basis:
        acc: Dict[int, Fraction] = {}
        for j, x in enumerate(row):
            if x:
                _add(acc, images[j], x)
        coords = to_cuspidal(space, acc)
        if any(c.denominator != 1 for c in coords):
            raise EngineError(f"level {space.level}: operator does not preserve the integral lattice")
        rows.append([int(c.numerator) for c in coords])
    return rows


def hecke_matrix(space: ModSymSpace, n: int) -> DomainMatrix:
    """T_n (U_q at q | N) on cuspidal coordinates, an integer matrix."""
    if n < 1:
        raise ValueError("Hecke index must be positive")
    cache = space.hecke_cache()
    if n not in cache:
        if space.dimension == 0:
            cache[n] = DomainMatrix.zeros((0, 0), ZZ).to_dense()
        else:
            cache[n] = zz_matrix(_operator(space, heilbronn_merel(n)), space.dimension)
    return cache[n]


def hecke_on_vector(space: ModSymSpace, coords: Sequence, n: int) -> List[Fraction]:
    """v*T_n for a single cuspidal vector, without building the full matrix."""
    cached = space.hecke_cache().get(n)
    if cached is not None:
        return frac_rows(qq_matrix([coords], space.dimension) * cached.convert_to(QQ))[0]
    raw = from_cuspidal(space, coords)
    images = _raw_images(space, list(heilbronn_merel(n)), sorted(raw))
    acc: Dict[int, Fraction] = {}
    for j, x in raw.items():
        _add(acc, images[j], x)
    return to_cuspidal(space, acc)


def star_involution(space: ModSymSpace) -> DomainMatrix:
    return space.star_matrix


def plus_lattice(lat: IntegerLattice, space: ModSymSpace) -> IntegerLattice:
    return plus_sublattice(lat, space.star_matrix)


def raw_hecke(space: ModSymSpace, n: int) -> DomainMatrix:
    """T_n on the full space of modular symbols in raw coordinates (QQ)."""
    m = space.raw_dimension
    images = _raw_images(space, list(heilbronn_merel(n)), range(m))
    return qq_matrix([_dense(images[j], m) for j in range(m)], m)


def eisenstein_prime(N: int) -> int:
    """Smallest prime l >= 7 with l not dividing N; T_l separates cusp forms from Eisenstein series."""
    ell = 7
    while N % ell == 0:
        ell = nextprime(ell)
    return ell


def winding_coordinates(space: ModSymSpace) -> Tuple[Fraction, ...]:
    """Cuspidal coordinates of the projection of {0, oo} along the Eisenstein part."""
    if space.genus == 0:
        raise GenusZero(f"level {space.level} has genus 0")
    if "winding" in space._memo:
        return space._memo["winding"]
    m, dim = space.raw_dimension, space.dimension
    ell = eisenstein_prime(space.level)
    poly = hecke_matrix(space, ell).charpoly()
    eis_gen = raw_hecke(space, ell).eval_poly([QQ(int(c)) for c in poly])
    red, piv = eis_gen.rref()
    eis = red.extract(list(range(len(piv))), list(range(m)))
    if len(piv) != m - dim:
        raise EngineError(f"level {space.level}: Eisenstein part has dimension {len(piv)}, expected {m - dim}")
    basis = qq_matrix(space.cuspidal_basis, m).vstack(eis)
    w = _dense(space.symbol_coords(0, 1), m)
    x = solve_rows(basis, qq_matrix([w], m))
    e = tuple(frac_rows(x)[0][:dim])
    space._memo["winding"] = e
    return e


# ----------------------------------------------------------------------------
# Paths between cusps and degeneracy maps
# ----------------------------------------------------------------------------
def zero_to(space: ModSymSpace, x: Optional[Fraction]) -> Sparse:
    """Raw coordinates of {0, x}; x None stands for oo."""
    if x is None:
        return space.symbol_coords(0, 1)
    x = Fraction(x)
    acc: Dict[int, Fraction] = {}
    if x == 0:
        return acc
    _add(acc, space.symbol_coords(0, 1))
    q_prev = 0
    for j, conv in enumerate(continued_fraction_convergents(continued_fraction_iterator(Rational(x.numerator, x.denominator)))):
        q = int(conv.q)
        sign = 1 if j % 2 else -1
        _add(acc, space.symbol_coords(sign * q, q_prev))
        q_prev = q
    return acc


def path(space: ModSymSpace, alpha: Optional[Fraction], beta: Optional[Fraction]) -> Sparse:
    """Raw coordinates of {alpha, beta} = {0, beta} - {0, alpha}."""
    acc = dict(zero_to(space, beta))
    _add(acc, zero_to(space, alpha), -1)
    return acc


def _scaled_cusp(num: int, den: int, t: int) -> Optional[Fraction]:
    return None if den == 0 else Fraction(t * num, den)


def degeneracy_matrix(source: ModSymSpace, target: ModSymSpace, t: int) -> DomainMatrix:
    """The map {a, b} -> {t*a, t*b} from level N to level M (t*M | N) on cuspidal coordinates."""
    if source.level % (target.level * t):
        raise ValueError("t*M must divide N")
    dim_s, dim_t = source.dimension, target.dimension
    if dim_s == 0 or dim_t == 0:
        return DomainMatrix.zeros((dim_s, dim_t), QQ).to_dense()
    images: Dict[int, Sparse] = {}
    for j in _support(source):
        a, b, c, d = lift_symbol(source.symbols[source.free_generators[j]])
        images[j] = path(target, _scaled_cusp(b, d, t), _scaled_cusp(a, c, t))
    rows = []
    for row in source.cuspidal_basis:
        acc: Dict[int, Fraction] = {}
        for j, x in enumerate(row):
            if x:
                _add(acc, images[j], x)
        rows.append(to_cuspidal(target, acc))
    return qq_matrix(rows, dim_t)

"""
Exact linear algebra over ZZ and QQ.

Matrices are sympy ``DomainMatrix`` objects; lattices are immutable
``IntegerLattice`` values holding a canonical Hermite basis, so two lattices
are equal exactly when their stored bases are equal.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, List, Optional, Sequence, Tuple

from sympy import GF, QQ, ZZ, multiplicity
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import (
    hermite_normal_form,
    invariant_factors,
    smith_normal_decomp,
)

from errors import (
    AmbientMismatch,
    InfiniteQuotient,
    NotASublattice,
    NotStarStable,
    SpanMismatch,
)

BigRational = Fraction
IntegerMatrix = DomainMatrix

Row = Tuple[int, ...]


# ----------------------------------------------------------------------------
# Conversions
# ----------------------------------------------------------------------------
def as_fraction(x) -> Fraction:
    """Domain element (int, mpz, mpq, PythonMPQ, Fraction) -> Fraction."""
    if isinstance(x, Fraction):
        return x
    num = getattr(x, "numerator", None)
    if num is not None and not isinstance(x, int):
        return Fraction(int(num), int(x.denominator))
    return Fraction(int(x))


def zz_matrix(rows: Sequence[Sequence[int]], ncols: Optional[int] = None) -> DomainMatrix:
    rows = [[int(e) for e in r] for r in rows]
    if not rows:
        return DomainMatrix.zeros((0, ncols or 0), ZZ)
    return DomainMatrix.from_list(rows, ZZ)


def qq_matrix(rows: Sequence[Sequence], ncols: Optional[int] = None) -> DomainMatrix:
    out = []
    for r in rows:
        out.append([QQ(f.numerator, f.denominator) for f in map(Fraction, r)])
    if not out:
        return DomainMatrix.zeros((0, ncols or 0), QQ)
    return DomainMatrix(out, (len(out), len(out[0])), QQ)


def int_rows(m: DomainMatrix) -> List[List[int]]:
    return [[int(e) for e in r] for r in m.to_list()]


def frac_rows(m: DomainMatrix) -> List[List[Fraction]]:
    return [[as_fraction(e) for e in r] for r in m.to_list()]


def to_qq(m: DomainMatrix) -> DomainMatrix:
    return m if m.domain == QQ else m.convert_to(QQ)


def to_zz(m: DomainMatrix) -> DomainMatrix:
    """QQ matrix with integral entries -> ZZ matrix; raises ValueError otherwise."""
    if m.domain == ZZ:
        return m
    rows = frac_rows(m)
    if any(e.denominator != 1 for r in rows for e in r):
        raise ValueError("matrix is not integral")
    return zz_matrix([[e.numerator for e in r] for r in rows], m.shape[1])


def clear_denominators(rows: Sequence[Sequence[Fraction]]) -> Tuple[int, List[List[int]]]:
    """Return (d, d*rows) with d the least common denominator."""
    d = 1
    for r in rows:
        for e in r:
            d = lcm(d, Fraction(e).denominator)
    return d, [[int(Fraction(e) * d) for e in r] for r in rows]


def same_matrix(a: DomainMatrix, b: DomainMatrix) -> bool:
    """Entrywise equality regardless of domain or storage format."""
    return a.shape == b.shape and frac_rows(a) == frac_rows(b)


def is_identity(m: DomainMatrix) -> bool:
    n, k = m.shape
    return n == k and same_matrix(m, DomainMatrix.eye(n, QQ))


# ----------------------------------------------------------------------------
# Normal forms
# ----------------------------------------------------------------------------
def smith_normal_form(m: DomainMatrix) -> Tuple[DomainMatrix, DomainMatrix, DomainMatrix]:
    """
    Smith form of an integer matrix.

    Returns (D, U, V) with U*M*V = D, U and V unimodular and the diagonal of D
    a divisibility chain of non-negative integers.
    """
    m = to_zz(m)
    d, u, v = smith_normal_decomp(m)
    return d, u, v


def elementary_divisors(m: DomainMatrix) -> List[int]:
    return [abs(int(x)) for x in invariant_factors(to_zz(m))]


def hnf_rows(rows: Sequence[Sequence[int]], ncols: int) -> List[Row]:
    """Canonical basis of the row lattice spanned by integer ``rows``."""
    rows = [r for r in rows if any(r)]
    if not rows:
        return []
    # column-style HNF of the transpose; its columns are the canonical row basis
    h = hermite_normal_form(zz_matrix(rows, ncols).transpose()).transpose()
    return [tuple(r) for r in int_rows(h)]


def _pivot(row: Sequence[int]) -> int:
    for i in range(len(row) - 1, -1, -1):
        if row[i]:
            return i
    return -1


def integer_left_kernel(m: DomainMatrix) -> List[Row]:
    """Basis of {x in ZZ^rows : x*M = 0}, via the Hermite form of [I | M]."""
    nrows, ncols = m.shape
    if nrows == 0:
        return []
    a = int_rows(to_zz(m)) if ncols else [[] for _ in range(nrows)]
    aug = [[1 if i == j else 0 for j in range(nrows)] + list(a[i]) for i in range(nrows)]
    basis = hnf_rows(aug, nrows + ncols)
    return [tuple(r[:nrows]) for r in basis if _pivot(r) < nrows]


def integer_right_kernel(m: DomainMatrix) -> List[Row]:
    """Primitive basis (as rows) of {x in ZZ^cols : M*x = 0}."""
    return integer_left_kernel(m.transpose())


def pivot_columns(m: DomainMatrix) -> Tuple[int, ...]:
    if m.shape[0] == 0:
        return ()
    _, pivots = to_qq(m).rref()
    return tuple(pivots)


def rank_of(rows: Sequence[Sequence], ncols: int) -> int:
    if not rows:
        return 0
    return qq_matrix(rows, ncols).rank()


def solve_rows(basis: DomainMatrix, targets: DomainMatrix) -> Optional[DomainMatrix]:
    """
    Return X with X*basis = targets (basis rows independent), or None when
    some target row leaves the QQ-span of the basis.
    """
    basis, targets = to_qq(basis), to_qq(targets)
    r = basis.shape[0]
    if targets.shape[0] == 0:
        return DomainMatrix.zeros((0, r), QQ)
    if r == 0:
        return None if not targets.is_zero_matrix else DomainMatrix.zeros((targets.shape[0], 0), QQ)
    piv = list(pivot_columns(basis))
    rows_idx = list(range(r))
    sq = basis.extract(rows_idx, piv)
    x = targets.extract(list(range(targets.shape[0])), piv) * sq.inv()
    if not same_matrix(x * basis, targets):
        return None
    return x


def induced_action(w: DomainMatrix, op: DomainMatrix, proj: DomainMatrix) -> DomainMatrix:
    """
    Matrix A on the target of ``proj`` with (v*op)*proj = (v*proj)*A, solved
    on rows ``w`` whose images span the target.
    """
    wp = to_qq(w) * to_qq(proj)
    image = to_qq(w) * to_qq(op) * to_qq(proj)
    return wp.inv() * image


def mod_p_nullity(m: DomainMatrix, p: int) -> int:
    """Dimension of {x : x*M = 0 mod p}."""
    nrows = m.shape[0]
    if nrows == 0:
        return 0
    if m.shape[1] == 0:
        return nrows
    mp = to_zz(m).convert_to(GF(p))
    return nrows - mp.rank()


# ----------------------------------------------------------------------------
# Lattices
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class IntegerLattice:
    """
    A finitely generated subgroup of QQ^n stored as (1/denominator)*basis,
    where basis is the canonical Hermite row basis of denominator*L and the
    denominator is minimal. Integral lattices have denominator 1.
    """
    ambient_rank: int
    basis: Tuple[Row, ...] = ()
    denominator: int = 1

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence], ambient_rank: int) -> "IntegerLattice":
        rows = [tuple(Fraction(e) for e in r) for r in rows]
        for r in rows:
            if len(r) != ambient_rank:
                raise AmbientMismatch(f"vector of length {len(r)} in ambient {ambient_rank}")
        d, scaled = clear_denominators(rows)
        basis = hnf_rows(scaled, ambient_rank)
        g = reduce(gcd, (e for r in basis for e in r), d)
        if g > 1:
            basis = [tuple(e // g for e in r) for r in basis]
            d //= g
        return cls(ambient_rank, tuple(basis), d if basis else 1)

    @classmethod
    def full(cls, n: int) -> "IntegerLattice":
        return cls(n, tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)), 1)

    @classmethod
    def zero(cls, n: int) -> "IntegerLattice":
        return cls(n, (), 1)

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def is_integral(self) -> bool:
        return self.denominator == 1

    def rows(self) -> List[List[Fraction]]:
        return [[Fraction(e, self.denominator) for e in r] for r in self.basis]

    def matrix(self) -> DomainMatrix:
        """Basis as a QQ matrix (rows)."""
        return qq_matrix(self.rows(), self.ambient_rank)

    def scaled(self, c) -> "IntegerLattice":
        c = Fraction(c)
        return IntegerLattice.from_rows([[e * c for e in r] for r in self.rows()], self.ambient_rank)

    def image(self, m: DomainMatrix) -> "IntegerLattice":
        """Image of the lattice under v -> v*m."""
        if self.rank == 0:
            return IntegerLattice.zero(m.shape[1])
        return IntegerLattice.from_rows(frac_rows(self.matrix() * to_qq(m)), m.shape[1])

    def contains(self, other: "IntegerLattice") -> bool:
        _same_ambient(self, other)
        if other.rank == 0:
            return True
        x = solve_rows(self.matrix(), other.matrix())
        return x is not None and all(e.denominator == 1 for r in frac_rows(x) for e in r)

    def contains_vector(self, v: Sequence) -> bool:
        return self.contains(IntegerLattice.from_rows([v], self.ambient_rank))


def _same_ambient(a: IntegerLattice, b: IntegerLattice) -> None:
    if a.ambient_rank != b.ambient_rank:
        raise AmbientMismatch(f"ambient ranks {a.ambient_rank} and {b.ambient_rank}")


def saturate(lat: IntegerLattice) -> IntegerLattice:
    """(QQ-span of L) intersected with ZZ^n."""
    n = lat.ambient_rank
    if lat.rank == 0:
        return IntegerLattice.zero(n)
    if lat.rank == n:
        return IntegerLattice.full(n)
    null = lat.matrix().nullspace()
    _, c = clear_denominators(frac_rows(null))
    rows = integer_left_kernel(zz_matrix(c, n).transpose())
    return IntegerLattice.from_rows(rows, n)


def lattice_sum(a: IntegerLattice, b: IntegerLattice) -> IntegerLattice:
    _same_ambient(a, b)
    return IntegerLattice.from_rows(a.rows() + b.rows(), a.ambient_rank)


def lattice_intersection(a: IntegerLattice, b: IntegerLattice) -> IntegerLattice:
    _same_ambient(a, b)
    n = a.ambient_rank
    if a.rank == 0 or b.rank == 0:
        return IntegerLattice.zero(n)
    d = lcm(a.denominator, b.denominator)
    ra = [[int(e * d) for e in r] for r in a.rows()]
    rb = [[int(e * d) for e in r] for r in b.rows()]
    kernel = integer_left_kernel(zz_matrix(ra + rb, n))
    out = []
    for k in kernel:
        x = k[: len(ra)]
        out.append([Fraction(sum(x[i] * ra[i][j] for i in range(len(ra))), d) for j in range(n)])
    return IntegerLattice.from_rows(out, n)


def same_span(a: IntegerLattice, b: IntegerLattice) -> bool:
    _same_ambient(a, b)
    if a.rank != b.rank:
        return False
    return rank_of(a.rows() + b.rows(), a.ambient_rank) == a.rank


def generalized_index(a: IntegerLattice, b: IntegerLattice) -> Fraction:
    """|det T| for T carrying a basis of ``a`` onto a basis of ``b``; [a:b] when b is inside a."""
    if not same_span(a, b):
        raise SpanMismatch("lattices span different subspaces")
    if a.rank == 0:
        return Fraction(1)
    piv = list(pivot_columns(a.matrix()))
    idx = list(range(a.rank))
    da = as_fraction(a.matrix().extract(idx, piv).det())
    db = as_fraction(b.matrix().extract(idx, piv).det())
    return abs(db / da)


def quotient_invariants(big: IntegerLattice, small: IntegerLattice) -> List[int]:
    """Elementary divisors (> 1) of big/small."""
    _same_ambient(big, small)
    x = solve_rows(big.matrix(), small.matrix()) if small.rank else None
    if small.rank and (x is None or any(e.denominator != 1 for r in frac_rows(x) for e in r)):
        raise NotASublattice("lattice is not contained in the larger one")
    if small.rank < big.rank:
        raise InfiniteQuotient(f"quotient of rank {big.rank - small.rank}")
    if big.rank == 0:
        return []
    return sorted(d for d in elementary_divisors(x) if d != 1)


def quotient_order(big: IntegerLattice, small: IntegerLattice) -> int:
    out = 1
    for d in quotient_invariants(big, small):
        out *= d
    return out


def plus_sublattice(lat: IntegerLattice, star: DomainMatrix) -> IntegerLattice:
    """Vectors of ``lat`` fixed by v -> v*star (a saturated sublattice of lat)."""
    n = lat.ambient_rank
    if lat.rank == 0:
        return IntegerLattice.zero(n)
    b = lat.matrix()
    x = solve_rows(b, b * to_qq(star))
    if x is None or any(e.denominator != 1 for r in frac_rows(x) for e in r):
        raise NotStarStable("lattice is not preserved by the involution")
    fix = to_zz(x) - DomainMatrix.eye(lat.rank, ZZ)
    coeffs = integer_left_kernel(fix)
    if not coeffs:
        return IntegerLattice.zero(n)
    return IntegerLattice.from_rows(frac_rows(qq_matrix(coeffs, lat.rank) * b), n)


def ord_p(x, p: int) -> Optional[int]:
    """p-adic valuation of a rational; None for zero."""
    x = Fraction(x)
    if x == 0:
        return None
    return multiplicity(p, abs(x.numerator)) - multiplicity(p, x.denominator)


def odd_part(x) -> Fraction:
    """Strip every factor of 2 from a nonzero rational."""
    x = abs(Fraction(x))
    return x / Fraction(2) ** ord_p(x, 2)

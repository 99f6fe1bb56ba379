from fractions import Fraction
from math import lcm

import pytest
from sympy import QQ, primerange

from errors import GenusZero, LevelTooLarge
from exactlinalg import IntegerLattice, frac_rows, int_rows, is_identity, qq_matrix, same_matrix
from modsym import (
    ProjectiveLine,
    build_space,
    degeneracy_matrix,
    eisenstein_prime,
    genus_x0,
    hecke_matrix,
    hecke_on_vector,
    heilbronn_merel,
    plus_lattice,
    pone_size,
    star_involution,
    to_cuspidal,
    winding_coordinates,
    zero_to,
)
from space_cache import dump_space, get_space, load_space


def _trace(m):
    rows = int_rows(m)
    return sum(rows[i][i] for i in range(len(rows)))


@pytest.mark.parametrize("N, size", [(1, 1), (11, 12), (12, 24), (37, 38), (25, 30)])
def test_pone_size(N, size):
    assert pone_size(N) == size
    assert len(ProjectiveLine(N)) == size


@pytest.mark.parametrize("N, g", [(1, 0), (10, 0), (11, 1), (22, 2), (23, 2), (37, 2), (43, 3), (64, 3)])
def test_genus(N, g):
    assert genus_x0(N) == g


@pytest.mark.parametrize("N", [1, 2, 11, 14, 20, 23, 26, 33, 37, 43])
def test_dimension_is_twice_genus(N):
    space = get_space(N)
    assert space.dimension == 2 * genus_x0(N)
    assert space.integral_lattice.rank == space.dimension


def test_reduction_is_canonical():
    p1 = ProjectiveLine(12)
    assert p1.reduce(5, 7) == p1.reduce(1, 7 * pow(5, -1, 12))
    assert p1.reduce(2, 4) is None
    assert p1.index(0, 5) == p1.index(0, 1)


def test_heilbronn_determinants():
    for n in (2, 3, 5, 6):
        mats = list(heilbronn_merel(n))
        assert mats
        assert all(a * d - b * c == n for a, b, c, d in mats)


def test_hecke_traces_level_11(space11):
    assert _trace(hecke_matrix(space11, 2)) == -4
    assert _trace(hecke_matrix(space11, 3)) == -2
    assert _trace(hecke_matrix(space11, 5)) == 2
    assert _trace(hecke_matrix(space11, 1)) == 2


def test_star_is_an_involution(space11, space37):
    for space in (space11, space37):
        s = star_involution(space)
        assert is_identity(s * s)


def test_star_commutes_with_hecke(space37):
    s = space37.star_matrix
    for n in (2, 3, 5):
        t = hecke_matrix(space37, n)
        assert same_matrix(s * t, t * s)


def test_hecke_operators_commute(space37):
    t2, t3, t4 = (hecke_matrix(space37, n) for n in (2, 3, 4))
    assert same_matrix(t2 * t3, t3 * t2)
    # T_4 = T_2^2 - 2
    sq = int_rows(t2 * t2)
    assert int_rows(t4) == [[x - 2 * (i == j) for j, x in enumerate(row)] for i, row in enumerate(sq)]


def test_plus_part_has_rank_genus(space11, space37):
    assert plus_lattice(IntegerLattice.full(2), space11).rank == 1
    assert plus_lattice(IntegerLattice.full(4), space37).rank == 2


def test_hecke_on_vector_matches_matrix(space37):
    v = [1, 0, -1, 2]
    expected = frac_rows(qq_matrix([v], 4) * hecke_matrix(space37, 3).convert_to(QQ))[0]
    assert hecke_on_vector(space37, v, 3) == expected


def test_winding_element_level_11(space11):
    e = winding_coordinates(space11)
    assert max(x.denominator for x in e) == 5
    star = frac_rows(qq_matrix([e], 2) * space11.star_matrix.convert_to(QQ))[0]
    assert star == list(e)


def test_winding_element_level_37(space37):
    e = winding_coordinates(space37)
    assert any(e)
    n = lcm(*(x.denominator for x in e))
    assert all((x * n).denominator == 1 for x in hecke_on_vector(space37, e, 2))


def test_genus_zero_has_no_winding_element():
    with pytest.raises(GenusZero):
        winding_coordinates(get_space(1))


def test_eisenstein_prime():
    assert eisenstein_prime(11) == 7
    assert eisenstein_prime(14) == 11
    assert eisenstein_prime(77) == 13


def test_path_between_equivalent_cusps_is_integral(space11):
    # 0 and 1 are equivalent cusps, so {0, 1} is a cycle
    coords = to_cuspidal(space11, zero_to(space11, Fraction(1)), check=True)
    assert all(c.denominator == 1 for c in coords)


def test_degeneracy_maps_are_surjective(space11):
    space22 = get_space(22)
    alpha = degeneracy_matrix(space22, space11, 1)
    beta = degeneracy_matrix(space22, space11, 2)
    assert alpha.shape == (space22.dimension, space11.dimension)
    assert alpha.rank() == space11.dimension
    assert beta.rank() == space11.dimension


def test_level_too_large(monkeypatch):
    monkeypatch.setenv("MODVIS_MAX_DIM", "10")
    with pytest.raises(LevelTooLarge):
        build_space(37)


@pytest.mark.parametrize("N, m, n", [(37, 2, 3), (37, 2, 5), (37, 3, 5), (33, 2, 3), (33, 5, 11), (43, 4, 3)])
def test_hecke_is_multiplicative_on_coprime_indices(N, m, n):
    space = get_space(N)
    assert int_rows(hecke_matrix(space, m * n)) == int_rows(hecke_matrix(space, m) * hecke_matrix(space, n))


def _boundary_of(space, row):
    acc = {}
    for j, x in enumerate(row):
        for k, c in space.boundary_data[space.free_generators[j]]:
            acc[k] = acc.get(k, 0) + x * c
    return {k: v for k, v in acc.items() if v}


@pytest.mark.parametrize("N", range(1, 121))
def test_structure_up_to_120(N):
    space = get_space(N)
    g = genus_x0(N)
    assert space.dimension == 2 * g
    if g == 0:
        return
    assert is_identity(space.star_matrix * space.star_matrix)
    for row in space.cuspidal_basis:
        assert _boundary_of(space, row) == {}
    bound = -(-pone_size(N) // 6)
    ops = {ell: hecke_matrix(space, ell) for ell in primerange(2, bound + 1)}
    for a in (2, 3):
        for ell, t in ops.items():
            assert same_matrix(ops[a] * t, t * ops[a]), (a, ell)
    assert dump_space(load_space(dump_space(space), N)) == dump_space(space)

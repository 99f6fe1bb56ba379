from fractions import Fraction

import pytest

from errors import GenusZero, RankNotZero
from exactlinalg import IntegerLattice, frac_rows, qq_matrix, quotient_order, to_qq
from space_cache import get_space
from winding import cuspidal_image_order, lratio, lratio_report, winding_data


def test_level_11_golden_values(space11, forms11):
    data = winding_data(space11)
    f = forms11[0]
    assert data.cuspidal_order == 5
    assert quotient_order(data.Te_lattice, data.Ie_lattice) == 5
    assert lratio(f) == Fraction(1, 5)
    assert cuspidal_image_order(f) == 5


def test_winding_lattices_are_nested(space11, space37):
    for space in (space11, space37):
        data = winding_data(space)
        assert data.Te_lattice.contains(data.Ie_lattice)
        assert data.Ie_lattice.is_integral
        assert IntegerLattice.full(space.dimension).contains(data.Ie_lattice)
        n_e = [x * data.cuspidal_order for x in data.e_coords]
        assert data.Ie_lattice.contains_vector(n_e)


def test_te_is_star_fixed(space11, space37):
    for space in (space11, space37):
        data = winding_data(space)
        rows = data.Te_lattice.rows()
        assert frac_rows(qq_matrix(rows, space.dimension) * to_qq(space.star_matrix)) == rows


def test_winding_data_is_memoized(space37):
    assert winding_data(space37) is winding_data(space37)


def test_genus_zero():
    with pytest.raises(GenusZero):
        winding_data(get_space(10))


def test_level_37_ranks(forms37):
    rank_one, rank_zero = forms37
    assert lratio(rank_one) == 0
    with pytest.raises(RankNotZero):
        cuspidal_image_order(rank_one)
    assert lratio(rank_zero) > 0
    # 37b has torsion of order 3
    assert 3 % cuspidal_image_order(rank_zero) == 0


def test_lratio_denominator_divides_n_squared(space37, forms37):
    n = winding_data(space37).cuspidal_order
    for f in forms37:
        value = lratio(f)
        if value:
            assert (n * n) % value.denominator == 0


def test_lratio_report(forms11, forms37):
    report = lratio_report(forms11[0])
    assert report.label == "11.1"
    assert report.lratio == Fraction(1, 5)
    assert report.cuspidal_image_order == 5
    assert report.denominator_guard_ok
    assert lratio_report(forms37[0]).cuspidal_image_order is None

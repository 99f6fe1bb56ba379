from math import exp, pi, sqrt

import numpy as np
import pytest
from sympy import primerange

from errors import BoundExceeded, EngineError
from exactlinalg import saturate
from newform import (
    analytic_rank_is_zero,
    atkin_lehner_sign,
    distinct_systems,
    eigenvalue,
    fourier_coefficients,
    homological_E,
    modular_degree_index,
    new_subspace,
    rational_newforms,
    root_number,
    sturm_bound,
)
from space_cache import get_space


def numeric_l_value(f, terms=200):
    """L(f, 1) = (1 + eps) * sum a_n / n * exp(-2 pi n / sqrt(N)) with eps the root number."""
    a = np.array(fourier_coefficients(f, terms), dtype=float)
    n = np.arange(1, terms + 1, dtype=float)
    return (1 + root_number(f)) * float(np.sum(a / n * np.exp(-2 * pi * n / sqrt(f.level))))


def truncation_error(f, terms=200):
    return 2.0 * exp(-2 * pi * terms / sqrt(f.level)) * terms


@pytest.mark.parametrize("N, bound", [(1, 1), (11, 2), (37, 7), (389, 65)])
def test_sturm_bound(N, bound):
    assert sturm_bound(N) == bound


def test_level_11_eigenvalues(forms11):
    assert len(forms11) == 1
    f = forms11[0]
    assert f.label == "11.1"
    assert [eigenvalue(f, ell) for ell in (2, 3, 5, 7)] == [-2, -1, 1, -2]
    assert eigenvalue(f, 1) == 1
    assert eigenvalue(f, 11) == 1


def test_level_1_is_empty():
    assert rational_newforms(get_space(1)) == []


def test_level_37_has_two_forms(forms37):
    assert len(forms37) == 2
    assert sorted(eigenvalue(f, 2) for f in forms37) == [-2, 0]
    assert distinct_systems(forms37)
    # ordered by (a_2, a_3, ...)
    assert [eigenvalue(f, 2) for f in forms37] == [-2, 0]


def test_eigenvalues_beyond_the_stored_bound(forms11):
    f = forms11[0]
    a = eigenvalue(f, 97)
    assert a * a <= 4 * 97
    with pytest.raises(BoundExceeded):
        eigenvalue(f, 10 ** 6 + 3)


def test_fourier_coefficients_are_multiplicative(forms11):
    f = forms11[0]
    a = fourier_coefficients(f, 30)
    assert a[:5] == [1, -2, -1, 2, 1]
    assert a[5] == a[1] * a[2]  # a_6 = a_2 a_3
    assert a[3] == a[1] * a[1] - 2  # a_4 = a_2^2 - 2
    assert a[10] == 1  # a_11 = 1 (split multiplicative)
    assert a[24] == a[4] * a[4] - 5  # a_25 = a_5^2 - 5


def test_old_forms_are_excluded():
    space22 = get_space(22)
    assert new_subspace(space22).rank == 0
    assert rational_newforms(space22) == []


def test_analytic_rank_level_11(forms11):
    f = forms11[0]
    assert analytic_rank_is_zero(f)
    value = numeric_l_value(f)
    assert abs(value - 0.2538) < 1e-3
    assert abs(value) > 10 * truncation_error(f)


def test_analytic_rank_level_37(forms37):
    rank_one, rank_zero = forms37
    assert not analytic_rank_is_zero(rank_one)
    assert analytic_rank_is_zero(rank_zero)
    assert abs(numeric_l_value(rank_one)) < 1e-8
    assert abs(numeric_l_value(rank_zero)) > 10 * truncation_error(rank_zero)


def test_homology_of_the_quotient(forms11, forms37):
    for f in forms11 + forms37:
        h = homological_E(f)
        assert h.lattice.rank == 2
        assert h.plus.rank == 1
        assert f.sub_lattice.rank == 2
        assert f.isotypic.image.rank == f.space.dimension - 2
        assert f.sub_lattice.image(f.quotient_map).rank == 2
        assert f.isotypic.image.image(f.quotient_map).rank == 0
        assert modular_degree_index(f) >= 1


def test_modular_degree_index_level_11(forms11):
    # the quotient map is an isomorphism when the space is one form
    assert modular_degree_index(forms11[0]) == 1


def test_atkin_lehner_and_parity(forms11, forms37):
    assert atkin_lehner_sign(11, forms11[0].eigenvalues) == -1
    assert root_number(forms11[0]) == 1
    rank_one, rank_zero = forms37
    assert root_number(rank_one) == -1
    assert root_number(rank_zero) == 1
    assert atkin_lehner_sign(44, {2: 0, 11: 1}) is None


def test_labels_are_unique(forms37):
    assert len({f.label for f in forms37}) == 2
    assert all(f.level == 37 for f in forms37)


def test_sub_lattice_is_saturated(forms37):
    for f in forms37:
        assert saturate(f.sub_lattice) == f.sub_lattice
        assert f.isotypic.kernel == f.sub_lattice


@pytest.mark.parametrize("N", [14, 15, 17, 19, 20, 21, 24, 26, 27, 30, 43])
def test_coefficients_obey_hasse(N):
    for f in rational_newforms(get_space(N)):
        for ell in primerange(2, 30):
            a = eigenvalue(f, ell)
            assert a * a <= 4 * ell


def test_atkin_lehner_above_the_eigenvalue_bound():
    # 53 lies above the stored bound; U_53 is computed on demand
    [f] = rational_newforms(get_space(53), bound=7)
    assert f.eigenvalues[53] in (-1, 1)
    assert f.atkin_lehner_sign == -f.eigenvalues[53]
    # rank one: root number -1
    assert root_number(f) == -1
    with pytest.raises(EngineError):
        atkin_lehner_sign(53, {2: -1})


# isogeny classes of elliptic curves over Q by conductor
ISOGENY_CLASSES = {
    11: 1, 14: 1, 15: 1, 17: 1, 19: 1, 20: 1, 21: 1, 22: 0, 23: 0, 24: 1, 26: 2, 27: 1, 28: 0, 29: 0,
    30: 1, 31: 0, 32: 1, 33: 1, 34: 1, 35: 1, 36: 1, 37: 2, 38: 2, 39: 1, 40: 1, 41: 0, 42: 1, 43: 1,
    44: 1, 45: 1, 46: 1, 47: 0, 48: 1, 49: 1, 50: 2, 51: 1, 52: 1, 53: 1, 54: 2, 55: 1, 56: 2, 57: 3,
    58: 2, 59: 0, 60: 0, 61: 1, 62: 1, 63: 1, 64: 1, 65: 1, 66: 3, 67: 1, 68: 0, 69: 1, 70: 1, 71: 0,
    72: 1, 73: 1, 74: 0, 75: 3, 76: 1, 77: 3, 78: 1, 79: 1, 80: 2, 81: 0, 82: 1, 83: 1, 84: 2, 85: 1,
    86: 0, 87: 0, 88: 1, 89: 2, 90: 3, 91: 2, 93: 0, 94: 1, 95: 0, 96: 2, 97: 0, 98: 1, 99: 4, 100: 1,
}


@pytest.mark.parametrize("N, classes", sorted(ISOGENY_CLASSES.items()))
def test_rational_newforms_match_isogeny_classes(N, classes):
    forms = rational_newforms(get_space(N))
    assert len(forms) == classes
    assert distinct_systems(forms)

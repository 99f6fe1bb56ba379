import pytest

from congruence import (
    DEFAULT_SAFETY,
    CongruentPair,
    ExclusionResult,
    congruence_power,
    excludes_other_congruences,
    find_visible_pairs,
)
from errors import BoundExceeded, PairDegenerate
from exactlinalg import IntegerLattice
from newform import RationalNewform, eigenvalue, good_primes, rational_newforms, sturm_bound
from space_cache import get_space


def _synthetic(level, index, eig):
    return RationalNewform(
        level=level,
        index=index,
        eigenvalues=dict(eig),
        sub_lattice=IntegerLattice.zero(0),
        quotient_map=None,
        isotypic=None,
    )


def test_pair_with_itself_is_rejected(forms11):
    with pytest.raises(PairDegenerate):
        congruence_power(forms11[0], forms11[0], 3)


def test_p_must_be_an_odd_prime(forms37):
    f, g = forms37
    with pytest.raises(ValueError):
        congruence_power(f, g, 2)
    with pytest.raises(ValueError):
        congruence_power(f, g, 9)


def test_power_of_p_dividing_every_difference():
    # primes used at level 11, safety 3: 2, 3, 5 (p = 3 skipped)
    f = _synthetic(11, 1, {2: 0, 3: 0, 5: 0})
    g = _synthetic(11, 2, {2: 9, 3: 1, 5: -18})
    assert congruence_power(f, g, 3) == 9
    assert congruence_power(g, f, 3) == 9
    assert congruence_power(f, g, 5) is None


def test_single_witness_kills_the_congruence():
    f = _synthetic(11, 1, {2: 0, 3: 0, 5: 0})
    g = _synthetic(11, 2, {2: 1, 3: 3, 5: 3})
    assert congruence_power(f, g, 3) is None


def test_identical_systems_exceed_the_bound():
    f = _synthetic(11, 1, {2: -2, 3: -1, 5: 1})
    g = _synthetic(11, 2, {2: -2, 3: -1, 5: 1})
    with pytest.raises(BoundExceeded):
        congruence_power(f, g, 3)


def test_level_37_forms_are_only_congruent_mod_2(forms37):
    f, g = forms37
    for p in (3, 5, 7, 11, 13):
        assert congruence_power(f, g, p) is None
        assert congruence_power(g, f, p) is None
    # every difference is even
    for ell in good_primes(37, DEFAULT_SAFETY * sturm_bound(37)):
        assert (eigenvalue(f, ell) - eigenvalue(g, ell)) % 2 == 0


def test_larger_bound_gives_the_same_answer(forms37):
    f, g = forms37
    assert congruence_power(f, g, 3, safety=30) == congruence_power(f, g, 3)


def test_no_pairs_at_level_11(space11, forms11):
    assert find_visible_pairs(space11, 13, forms=forms11) == []


def test_no_odd_pairs_at_level_37(space37, forms37):
    assert find_visible_pairs(space37, 13, forms=forms37) == []


def test_pair_metadata(forms37):
    rank_one, rank_zero = forms37
    pair = CongruentPair(f=rank_zero, g=rank_one, p=3, r=27, index_bound=21)
    assert pair.level == 37
    assert pair.exponent == 3
    assert pair.rank_profile == ("zero", "positive")
    assert pair.safety == DEFAULT_SAFETY


@pytest.mark.parametrize("p", [3, 5, 7])
def test_exclusion_at_level_11(forms11, p):
    assert excludes_other_congruences(forms11[0], p) is ExclusionResult.PROVED_EXCLUDED


def test_exclusion_sees_the_mod_2_congruence(forms37):
    rank_one, rank_zero = forms37
    assert excludes_other_congruences(rank_zero, 2) is ExclusionResult.POSSIBLE_CONGRUENCE
    assert excludes_other_congruences(rank_zero, 2, also_ignore=[rank_one]) is ExclusionResult.PROVED_EXCLUDED


@pytest.mark.parametrize("p", [3, 5, 7])
def test_exclusion_at_level_37_odd_primes(forms37, p):
    rank_one, rank_zero = forms37
    assert excludes_other_congruences(rank_zero, p) is ExclusionResult.PROVED_EXCLUDED


def test_exclusion_sees_lower_levels():
    f = rational_newforms(get_space(33))[0]
    assert [eigenvalue(f, ell) for ell in (2, 5, 7)] == [1, -2, 4]
    # 11a agrees with 33a modulo 3 at 2, 5 and 7
    assert excludes_other_congruences(f, 3) is ExclusionResult.POSSIBLE_CONGRUENCE
    assert excludes_other_congruences(f, 5) is ExclusionResult.PROVED_EXCLUDED

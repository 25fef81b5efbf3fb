import random
from fractions import Fraction

import pytest

from carnot.lie import abelian, free_nilpotent, heisenberg
from carnot.uea import (
    LieMembershipError,
    UeaElement,
    ad_power_expand,
    commutator_factor,
    from_lie,
    from_word,
    multiply,
    normal_form_of_words,
    transpose_word,
)


def gen(alg, i):
    return UeaElement.generator(alg, i)


def random_element(alg, rng, max_terms=3, max_len=3):
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        mono = tuple(sorted(rng.randrange(alg.dim) for _ in range(rng.randint(0, max_len))))
        terms[mono] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return UeaElement(alg, terms)


def test_single_rewrite_h1(h1):
    x1, x2, t = gen(h1, 0), gen(h1, 1), gen(h1, 2)
    assert x2 * x1 == x1 * x2 - t


def test_abelian_commutes():
    a = abelian(2)
    assert gen(a, 1) * gen(a, 0) == gen(a, 0) * gen(a, 1)


def test_rejects_unsorted_monomial(h1):
    with pytest.raises(ValueError):
        UeaElement(h1, {(1, 0): 1})


@pytest.mark.parametrize("alg", [heisenberg(1), free_nilpotent(2, 3)], ids=lambda a: a.label)
def test_associative_and_bilinear(alg):
    rng = random.Random(7)
    for _ in range(60):
        a, b, c = (random_element(alg, rng) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert (a * 3) * b == (a * b) * 3
    one = UeaElement.unit(alg)
    assert one * a == a == a * one


def test_from_word_basics(h1):
    assert from_word(h1, ()) == UeaElement.unit(h1)
    assert from_word(h1, (1, 2)) - from_word(h1, (2, 1)) == gen(h1, 2)
    with pytest.raises(ValueError):
        from_word(h1, (3,))


def test_word_221_left_and_right_folds(h1):
    x1, x2, t = gen(h1, 0), gen(h1, 1), gen(h1, 2)
    expected = x1 * x2 * x2 - x2 * t * 2
    assert from_word(h1, (2, 2, 1)) == expected
    assert multiply(multiply(x2, x2), x1) == multiply(x2, multiply(x2, x1)) == expected
    assert repr(expected) == "-2*X2*T + X1*X2^2"


def test_normal_form_canonical(f23):
    rng = random.Random(3)
    for _ in range(30):
        word = tuple(rng.randint(1, 2) for _ in range(rng.randint(1, 6)))
        split = rng.randint(0, len(word))
        assert from_word(f23, word) == from_word(f23, word[:split]) * from_word(f23, word[split:])
    words = {(1, 2, 1): 2, (1, 2, 2): -1, (2,): 5}
    expected = from_word(f23, (1, 2, 1)) * 2 - from_word(f23, (1, 2, 2)) + from_word(f23, (2,)) * 5
    assert normal_form_of_words(f23, words) == expected


def test_grading_respected(f23):
    rng = random.Random(11)
    for _ in range(20):
        u = from_word(f23, tuple(rng.randint(1, 2) for _ in range(3)))
        v = from_word(f23, tuple(rng.randint(1, 2) for _ in range(2)))
        assert set((u * v).homogeneous_parts()) <= {5}


def test_transpose_word(h1):
    assert transpose_word(h1, (1,)) == -gen(h1, 0)
    assert transpose_word(h1, (1, 2)) == gen(h1, 0) * gen(h1, 1) - gen(h1, 2)
    rng = random.Random(5)
    for _ in range(20):
        w = tuple(rng.randint(1, 2) for _ in range(rng.randint(0, 5)))
        back = transpose_word(h1, tuple(reversed(w))) * (-1) ** len(w)
        assert back == from_word(h1, w)


def test_ad_power_s1_is_bracket_definition(h1):
    lhs, rhs = ad_power_expand(h1, 1, 2, 1)
    assert lhs == rhs == gen(h1, 2) + gen(h1, 1) * gen(h1, 0)


def test_ad_power_s2_h1(h1):
    lhs, rhs = ad_power_expand(h1, 1, 2, 2)
    x1, x2, t = gen(h1, 0), gen(h1, 1), gen(h1, 2)
    assert lhs == rhs == t * x1 * 2 + x2 * x1 * x1


@pytest.mark.parametrize("alg", [heisenberg(1), free_nilpotent(2, 3), heisenberg(2)], ids=lambda a: a.label)
def test_ad_power_identity_all_pairs(alg):
    for ell in range(1, alg.m + 1):
        for ell2 in range(1, alg.m + 1):
            for s in range(1, 6):
                lhs, rhs = ad_power_expand(alg, ell, ell2, s)
                assert lhs == rhs


def test_commutator_factor_h1(h1):
    cf = commutator_factor(h1, 2, 1)
    x1, x2, t = gen(h1, 0), gen(h1, 1), gen(h1, 2)
    assert cf.element == t * -2 + x1 * x2
    assert from_word(h1, (2, 2, 1)) == x1 * x2 * x2 - t * x2 * 2


def test_commutator_factor_abelian():
    a = abelian(2)
    assert commutator_factor(a, 2, 1).element == gen(a, 0)


@pytest.mark.parametrize("alg", [heisenberg(1), free_nilpotent(2, 3), free_nilpotent(3, 2)], ids=lambda a: a.label)
def test_commutator_factor_membership(alg):
    for ell in range(1, alg.m + 1):
        for ell2 in range(1, alg.m + 1):
            cf = commutator_factor(alg, ell, ell2)
            assert from_word(alg, (ell,) * alg.r + (ell2,)) == cf.element * gen(alg, ell - 1)
            for lie, s in cf.parts:
                assert all(alg.weights[k] == alg.r - s for k in lie)


def test_from_lie(h1):
    assert from_lie(h1, {2: Fraction(3)}) == gen(h1, 2) * 3


def test_membership_error_is_assertion():
    assert issubclass(LieMembershipError, AssertionError)

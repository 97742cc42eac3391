import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclobraid.braid import (
    BraidWord,
    WordEvaluator,
    algebraic_data,
    all_zero,
    axioms_check,
    character,
    check_presentation,
    coproduct_identities,
    presentation_relations,
    random_word,
    reduced_words,
    rho,
)
from cyclobraid.coeff import CycloRing, HSeries, LambdaRing
from cyclobraid.modrep import cartan_module, ematrix, irrep, kmatrix, rmatrix


def make(n, N=2, d=1, K=3, lam=None, tau_product="ascending"):
    ring = LambdaRing(N) if lam is None else CycloRing(N)
    weight = ring.lam() if lam is None else ring.lift(lam)
    return algebraic_data(cartan_module(weight, ring, K), irrep(d, ring, K), n, N, tau_product)


@pytest.fixture(scope="module")
def data2():
    return make(2, N=3)


def test_parse_roundtrip():
    w = BraidWord.parse("t s1 s2^-1 t^-1", 3)
    assert w.letters == ((0, 1), (1, 1), (2, -1), (0, -1))
    assert str(w) == "t s1 s2^-1 t^-1"
    assert BraidWord.parse("", 2).letters == ()


@pytest.mark.parametrize("bad", ["x", "s0", "s3", "t^2", "s1^+1"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        BraidWord.parse(bad, 3)


@pytest.mark.parametrize("n,L", [(2, 4), (3, 3)])
def test_reduced_word_count(n, L):
    g = 2 * n
    expect = sum(g * (g - 1) ** (k - 1) for k in range(1, L + 1))
    words = list(reduced_words(n, L))
    assert len(words) == expect == len(set(words))
    assert all(w.is_reduced() for w in words)


def test_presentation_relation_list():
    names = [r[0] for r in presentation_relations(4)]
    assert names == ["t s1 t s1 = s1 t s1 t", "t s2 = s2 t", "t s3 = s3 t", "s1 s2 s1 = s2 s1 s2", "s2 s3 s2 = s3 s2 s3", "s1 s3 = s3 s1"]


words2 = st.lists(st.tuples(st.integers(0, 1), st.sampled_from([1, -1])), max_size=4).map(lambda l: BraidWord(2, tuple(l)))


@settings(max_examples=20)
@given(words2, words2)
def test_homomorphism_first_letter_acts_first(data2, a, b):
    assert rho(a * b, data2) == rho(b, data2) @ rho(a, data2)


@settings(max_examples=20)
@given(words2)
def test_inverse_word(data2, w):
    assert rho(w, data2) @ rho(w.inverse(), data2) == data2.identity()


@settings(max_examples=20)
@given(words2, words2)
def test_character_conjugation_invariance(data2, w, u):
    assert character(data2, u * w * u.inverse()) == character(data2, w)


def test_character_of_empty_word(data2):
    tr = character(data2, BraidWord(2, ()))
    assert tr == HSeries.constant(data2.ring, 4, data2.order)


def test_word_evaluator_agrees(data2):
    ev = WordEvaluator(data2)
    for w in reduced_words(2, 3):
        assert ev(w) == rho(w, data2)


@pytest.mark.parametrize("n,N", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_presentation_exact(n, N):
    assert all_zero(check_presentation(make(n, N=N)))


def test_descending_canary_fails_at_second_order():
    rep = check_presentation(make(3, N=2, tau_product="descending"))
    bad = [r for r in rep if max(r["residual_per_order"]) > 0]
    assert bad
    first = min(next(k for k, v in enumerate(r["residual_per_order"]) if v) for r in bad)
    assert first == 2


def test_coproduct_identities():
    ring = LambdaRing(3)
    W = cartan_module(ring.lam(), ring, 3)
    assert all_zero(coproduct_identities(W, irrep(1, ring, 3), 3))


def test_axioms_formal_weight():
    ring = LambdaRing(2)
    V = irrep(2, ring, 3)
    W = cartan_module(ring.lam(), ring, 3)
    assert all_zero(axioms_check(rmatrix(V, V), kmatrix(V, V), ematrix(W, V, 2), W, V))


def test_random_word_is_reduced_and_seeded():
    a = [random_word(3, 6, random.Random(5)) for _ in range(2)]
    assert a[0] == a[1]
    assert a[0].is_reduced() and len(a[0]) == 6


def test_strand_mismatch():
    with pytest.raises(ValueError):
        rho(BraidWord(3, ()), make(2))

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclobraid import uqsl2
from cyclobraid.uqsl2 import (
    E_GEN,
    F_GEN,
    FIELD,
    K_GEN,
    KINV_GEN,
    ONE,
    PBWElement,
    antipode,
    canonical_text,
    dck_determinant,
    dck_determinant_literal,
    equal_up_to_unit,
    gram_factor,
    k,
    pbw_mul,
    q,
    shapovalov_H,
    shapovalov_property_residual,
    twist_term,
    verify_K_recursion,
)

# ---------------------------------------------------------------------------
# brute-force oracle: rewrite words in the letters f, k, K (= k^-1), e
# ---------------------------------------------------------------------------

RANK = {"f": 0, "k": 1, "K": 1, "e": 2}
QQM = q - 1 / q


def _rewrite(pair):
    """Replacement for an adjacent out-of-order pair: list of (word, coeff)."""
    x, y = pair
    if (x, y) in (("k", "K"), ("K", "k")):
        return [("", ONE)]
    if (x, y) == ("e", "f"):
        return [("fe", ONE), ("k", 1 / QQM), ("K", -1 / QQM)]
    if (x, y) == ("e", "k"):
        return [("ke", q**-2)]
    if (x, y) == ("e", "K"):
        return [("Ke", q**2)]
    if (x, y) == ("k", "f"):
        return [("fk", q**-2)]
    if (x, y) == ("K", "f"):
        return [("fK", q**2)]
    return None


def normal_order(words: dict) -> dict:
    done: dict = {}
    todo = dict(words)
    while todo:
        w, c = todo.popitem()
        for i in range(len(w) - 1):
            pair = (w[i], w[i + 1])
            if RANK[pair[0]] > RANK[pair[1]] or pair in (("k", "K"), ("K", "k")):
                for rep, cc in _rewrite(pair):
                    nw = w[:i] + rep + w[i + 2 :]
                    todo[nw] = todo.get(nw, FIELD.zero) + c * cc
                break
        else:
            a = w.count("f")
            b = w.count("k") - w.count("K")
            key = (a, b, w.count("e"))
            done[key] = done.get(key, FIELD.zero) + c
    return {key: c for key, c in done.items() if c}


def to_words(x: PBWElement) -> dict:
    out = {}
    for (a, b, c), coeff in x.terms.items():
        out["f" * a + ("k" * b if b > 0 else "K" * (-b)) + "e" * c] = coeff
    return out


def oracle_mul(x: PBWElement, y: PBWElement) -> PBWElement:
    words: dict = {}
    for wx, cx in to_words(x).items():
        for wy, cy in to_words(y).items():
            words[wx + wy] = words.get(wx + wy, FIELD.zero) + cx * cy
    return PBWElement(normal_order(words))


coeffs = st.sampled_from([ONE, -ONE, 2 * ONE, q, q**-1, q**2 - 1, 1 / (q + 1)])


@st.composite
def pbw(draw, max_terms=2, max_deg=2):
    terms = {}
    for _ in range(draw(st.integers(1, max_terms))):
        key = (draw(st.integers(0, max_deg)), draw(st.integers(-2, 2)), draw(st.integers(0, max_deg)))
        terms[key] = draw(coeffs)
    return PBWElement(terms)


def test_basic_relations():
    assert pbw_mul(E_GEN, F_GEN) == pbw_mul(F_GEN, E_GEN) + (K_GEN - KINV_GEN).scale(1 / QQM)
    assert pbw_mul(K_GEN, E_GEN) == pbw_mul(E_GEN, K_GEN).scale(q**2)
    assert pbw_mul(K_GEN, F_GEN) == pbw_mul(F_GEN, K_GEN).scale(q**-2)
    assert pbw_mul(K_GEN, KINV_GEN) == PBWElement.scalar(ONE)


@settings(max_examples=30)
@given(pbw(), pbw())
def test_pbw_mul_matches_rewriting_oracle(x, y):
    assert pbw_mul(x, y) == oracle_mul(x, y)


@settings(max_examples=25)
@given(pbw(1, 1), pbw(1, 1), pbw(1, 1))
def test_pbw_mul_associative(x, y, z):
    assert pbw_mul(pbw_mul(x, y), z) == pbw_mul(x, pbw_mul(y, z))


@settings(max_examples=25)
@given(pbw(), st.integers(-2, 2), st.integers(-2, 2))
def test_shapovalov_projection_is_cartan_linear(x, b, c):
    left = PBWElement.monomial(0, b, 0)
    right = PBWElement.monomial(0, c, 0)
    assert shapovalov_H(pbw_mul(pbw_mul(left, x), right)) == k**b * shapovalov_H(x) * k**c


@settings(max_examples=20)
@given(pbw(1, 1), pbw(1, 1))
def test_antipode_is_antimultiplicative(x, y):
    assert antipode(pbw_mul(x, y)) == pbw_mul(antipode(y), antipode(x))


def test_antipode_on_generators():
    assert antipode(E_GEN) == -pbw_mul(E_GEN, KINV_GEN)
    assert antipode(F_GEN) == -pbw_mul(K_GEN, F_GEN)
    assert antipode(K_GEN) == KINV_GEN


@pytest.mark.parametrize("m", range(0, 5))
def test_shapovalov_inverse_defining_property(m):
    assert shapovalov_property_residual(m, E_GEN**m, F_GEN**m) == 0


def test_gram_factor_small_cases():
    # H(e f) = [k; 0] = (k - k^-1)/(q - q^-1)
    assert gram_factor(1) == (k - 1 / k) / QQM
    assert gram_factor(0) == ONE


@pytest.mark.parametrize("m", range(1, 5))
def test_gram_equals_determinant_up_to_unit(m):
    assert equal_up_to_unit(gram_factor(m), dck_determinant(m))


@pytest.mark.parametrize("m", range(1, 5))
def test_literal_determinant_does_not_match(m):
    assert not equal_up_to_unit(gram_factor(m), dck_determinant_literal(m))


def test_unit_check_rejects_nonunits():
    assert equal_up_to_unit(q**3 * k**-2 * (1 - k**2), 1 - k**2)
    assert not equal_up_to_unit((1 - q * k) * (1 - k**2), 1 - k**2)


def test_k_recursion():
    rep = verify_K_recursion(3)
    assert [r["m"] for r in rep] == [0, 1, 2, 3]
    assert all(r["zero"] for r in rep)


def test_k_recursion_bound():
    with pytest.raises(ValueError):
        verify_K_recursion(5)


def test_twist_term_denominators():
    assert twist_term(1).denominator_at_classical_point() == 0
    assert twist_term(1, -1).denominator_at_classical_point() == 2


def test_twist_term_rejects_trivial_shift():
    with pytest.raises(ValueError):
        twist_term(1, 1)


def test_canonical_text_is_stable():
    x = pbw_mul(E_GEN, F_GEN)
    assert canonical_text(x) == canonical_text(PBWElement(dict(reversed(list(x.terms.items())))))
    assert canonical_text(PBWElement()) == "0"


def test_rank_one_cartan_data():
    assert uqsl2.SL2.cartan == ((2,),)
    with pytest.raises(ValueError):
        uqsl2.CartanData(2, ((2, -1), (-2, 2)), (1, 1))

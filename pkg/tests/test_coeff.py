import cmath
from fractions import Fraction

import pytest
import sympy as sp
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from cyclobraid.coeff import (
    CC,
    QQ,
    CycloRing,
    CycloScalar,
    HSeries,
    LambdaRat,
    LambdaRing,
    cyclotomic_polynomial,
    exp_hbar_coeffs,
    q_number_coeffs,
    series_exp_nilpotent,
    series_inv,
)

small = st.fractions(min_value=-5, max_value=5, max_denominator=6)
orders = st.sampled_from([2, 3, 4, 5, 6, 8, 12])


def cyclo(N, draw_list):
    return CycloScalar(N, [mpq(c.numerator, c.denominator) for c in draw_list])


@st.composite
def cyclo_pair(draw):
    N = draw(orders)
    phi = len(cyclotomic_polynomial(N)) - 1
    a = cyclo(N, draw(st.lists(small, min_size=phi, max_size=phi)))
    b = cyclo(N, draw(st.lists(small, min_size=phi, max_size=phi)))
    c = cyclo(N, draw(st.lists(small, min_size=phi, max_size=phi)))
    return N, a, b, c


@pytest.mark.parametrize("N", range(1, 31))
def test_cyclotomic_polynomial_matches_sympy(N):
    x = sp.symbols("x")
    ref = sp.Poly(sp.cyclotomic_poly(N, x), x).all_coeffs()[::-1]
    assert list(cyclotomic_polynomial(N)) == [int(c) for c in ref]


@given(cyclo_pair())
def test_field_laws(data):
    N, a, b, c = data
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    if a:
        assert a * a.inverse() == CycloScalar.from_rational(N, 1)


@given(cyclo_pair())
def test_complex_embedding_is_a_homomorphism(data):
    _, a, b, _ = data
    assert abs((a * b).to_complex() - a.to_complex() * b.to_complex()) < 1e-9
    assert abs((a + b).to_complex() - a.to_complex() - b.to_complex()) < 1e-9


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6, 7, 12])
def test_zeta_is_primitive_root(N):
    z = CycloScalar.zeta(N)
    one = CycloScalar.from_rational(N, 1)
    assert z**N == one
    for p in range(1, N):
        assert z**p != one
    assert abs(z.to_complex() - cmath.exp(2j * cmath.pi / N)) < 1e-12
    assert z ** (-1) * z == one


def test_zeta_two_is_minus_one():
    assert CycloScalar.zeta(2) == CycloScalar.from_rational(2, -1)


def test_sum_of_roots_of_unity_vanishes():
    for N in (3, 5, 6, 9):
        total = sum((CycloScalar.zeta(N, p) for p in range(N)), CycloScalar(N))
        assert total.is_zero()


@st.composite
def lam_rat(draw, N=3):
    num = draw(st.lists(small, min_size=0, max_size=3))
    den = draw(st.lists(small, min_size=1, max_size=3).filter(lambda d: any(d)))
    return LambdaRat(N, [mpq(c.numerator, c.denominator) for c in num], [mpq(c.numerator, c.denominator) for c in den])


@given(lam_rat(), lam_rat(), st.fractions(min_value=-3, max_value=3, max_denominator=4))
def test_lambda_rat_evaluation_is_a_homomorphism(a, b, v):
    v = mpq(v.numerator, v.denominator)
    try:
        ea, eb = a.evaluate(v), b.evaluate(v)
    except ZeroDivisionError:
        return
    assert (a + b).evaluate(v) == ea + eb
    assert (a * b).evaluate(v) == ea * eb


@given(lam_rat(), st.fractions(min_value=-3, max_value=3, max_denominator=4))
def test_lambda_shift_then_evaluate(a, c):
    c = mpq(c.numerator, c.denominator)
    v = mpq(1, 7)
    try:
        ref = a.evaluate(v + c)
    except ZeroDivisionError:
        return
    assert a.shift(c).evaluate(v) == ref


def test_lambda_rat_is_reduced():
    lam = LambdaRat.lam(2)
    x = (lam * lam - 1) / (lam - 1)
    assert x.is_polynomial()
    assert x == lam + 1


def test_lambda_rat_zero_denominator():
    with pytest.raises(ZeroDivisionError):
        LambdaRat(2, (1,), ())


@st.composite
def series_triple(draw):
    K = draw(st.integers(0, 5))
    mk = lambda: HSeries(QQ, [mpq(c.numerator, c.denominator) for c in draw(st.lists(small, min_size=K + 1, max_size=K + 1))])  # noqa: E731
    return mk(), mk(), mk()


@given(series_triple())
def test_series_ring_laws(t):
    a, b, c = t
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    if a.coeffs[0]:
        one = HSeries.constant(QQ, 1, a.order)
        assert a * series_inv(a) == one


def test_series_truncation_mismatch():
    with pytest.raises(ValueError):
        HSeries(QQ, [1, 2]) + HSeries(QQ, [1, 2, 3])


def test_series_ring_mismatch():
    with pytest.raises(TypeError):
        HSeries(QQ, [1]) + HSeries(CycloRing(3), [1])


def test_valuation():
    assert HSeries(QQ, [0, 0, 3, 1]).valuation() == 2
    assert HSeries(QQ, [0, 0]).valuation() == 2


def test_exp_of_nilpotent_series_matches_sympy():
    h = sp.symbols("h")
    a = HSeries(QQ, [0, 1, mpq(1, 2), 0, 0, 0])
    got = series_exp_nilpotent(a)
    ref = sp.series(sp.exp(h + h**2 / 2), h, 0, 6).removeO()
    assert [Fraction(int(c.numerator), int(c.denominator)) for c in got.coeffs] == [
        Fraction(str(ref.coeff(h, k))) for k in range(6)
    ]


@pytest.mark.parametrize("x", [0, 1, 2, 3, 5, -2])
def test_q_numbers_match_sympy(x):
    h = sp.symbols("h")
    K = 6
    ref = sp.series(sp.sinh(x * h) / sp.sinh(h), h, 0, K + 1).removeO()
    got = q_number_coeffs(x, K)
    assert [Fraction(int(c.numerator), int(c.denominator)) for c in got] == [
        Fraction(str(ref.coeff(h, k))) for k in range(K + 1)
    ]


def test_exp_hbar_coefficients():
    assert exp_hbar_coeffs(mpq(2), 3, mpq(1)) == (1, 2, 2, mpq(4, 3))


def test_lambda_ring_json_is_string_exact():
    ring = LambdaRing(3)
    x = ring.lam() * mpq(1, 3) + ring.zeta()
    out = ring.dumps(x)
    assert out == {"num": [["0", "1"], ["1/3", "0"]], "den": [["1", "0"]]}


def test_complex_ring_roundtrip():
    assert CC.to_complex(CC.lift(2)) == 2

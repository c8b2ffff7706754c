import cmath
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hexoverlap.cyclotomic import (
    I,
    ONE,
    ZERO,
    ZETA,
    CycloNum,
    Expansion,
    RealQuad,
    conj,
    embed,
    expand,
    field_inv,
    mul,
    parse_cyclo,
    re_im,
    zeta_pow,
)
from hexoverlap.tsdata import ts_constants

Q, OMEGA, U = ts_constants()

small = st.fractions(min_value=-20, max_value=20, max_denominator=12)
cyclo = st.builds(CycloNum, small, small, small, small)
nonzero = cyclo.filter(bool)


def cyc(*c):
    return CycloNum(*c)


def test_products():
    assert mul(ZETA, zeta_pow(3)) == cyc(-1, 0, 1, 0)
    assert mul(zeta_pow(3), zeta_pow(3)) == cyc(-1, 0, 0, 0)


def test_zeta_order():
    assert ZETA**12 == ONE
    assert ZETA**6 == cyc(-1)
    z = ONE
    for _ in range(6):
        z = mul(z, ZETA)
    assert z == cyc(-1)
    for _ in range(6):
        z = mul(z, ZETA)
    assert z == ONE


def test_conj():
    assert conj(ZETA) == cyc(0, 1, 0, -1)
    assert conj(ONE) == ONE


def test_field_inv():
    assert field_inv(ZETA) == cyc(0, 1, 0, -1)
    assert field_inv(cyc(2)) == cyc(Fraction(1, 2))
    x = cyc(-1, 0, 1, 0)
    assert mul(field_inv(x), x) == ONE


def test_field_inv_zero():
    with pytest.raises(ZeroDivisionError, match="division by zero"):
        field_inv(ZERO)


def test_ts_expansion_examples():
    assert expand(Q, ONE) == cyc(0, 0, -2, 0)
    assert expand(Q, ZETA) == cyc(0, -2, 0, 0)
    x, y = embed(expand(Q, ONE))
    assert x == pytest.approx(-1.0, abs=1e-12)
    assert y == pytest.approx(-math.sqrt(3), abs=1e-12)
    assert Q.determinant() == RealQuad(-4)


def test_embed_examples():
    assert embed(ZETA) == pytest.approx((math.sqrt(3) / 2, 0.5), abs=1e-15)
    assert embed(I) == pytest.approx((0.0, 1.0), abs=1e-15)
    x, y = embed(2 * U)
    assert (x, y) == pytest.approx((math.sqrt(3), 1.0), abs=1e-12)
    assert math.hypot(x, y) == pytest.approx(2.0)


def test_re_im_examples():
    assert re_im(ONE) == (RealQuad(1), RealQuad(0))
    assert re_im(ZETA) == (RealQuad(0, Fraction(1, 2)), RealQuad(Fraction(1, 2)))


@given(cyclo)
def test_re_im_of_real_part(x):
    re, im = re_im(x + conj(x))
    assert im == RealQuad(0)
    assert re == 2 * re_im(x)[0]


@given(cyclo, cyclo, cyclo)
def test_ring_axioms(a, b, c):
    assert mul(mul(a, b), c) == mul(a, mul(b, c))
    assert mul(a, b + c) == mul(a, b) + mul(a, c)
    assert mul(a, b) == mul(b, a)
    assert mul(ONE, a) == a


@given(cyclo)
def test_conj_involution(x):
    assert conj(conj(x)) == x


@given(nonzero)
def test_inverse(x):
    assert mul(x, field_inv(x)) == ONE


@settings(max_examples=200)
@given(cyclo)
def test_q_squared_is_four(z):
    assert expand(Q, expand(Q, z)) == 4 * z


@given(
    st.builds(CycloNum, *[st.integers(-50, 50)] * 4),
    st.builds(CycloNum, *[st.integers(-50, 50)] * 4),
)
def test_embed_homomorphism(a, b):
    def c(z):
        return complex(*embed(z))

    assert abs(c(mul(a, b)) - c(a) * c(b)) <= 1e-12 * max(1.0, abs(c(a)) * abs(c(b)))
    assert abs(c(a + b) - (c(a) + c(b))) <= 1e-12 * max(1.0, abs(c(a)) + abs(c(b)))


def test_embed_matches_cmath():
    z = cmath.exp(1j * math.pi / 6)
    for k in range(12):
        assert abs(complex(*embed(zeta_pow(k))) - z**k) < 1e-12


def test_omega_rotates_sixty_degrees():
    x = cyc(3, -1, Fraction(2, 5), 7)
    got = complex(*embed(mul(OMEGA, x)))
    want = complex(*embed(x)) * cmath.exp(1j * math.pi / 3)
    assert abs(got - want) < 1e-12


@given(small, small)
def test_realquad_sign(a, b):
    q = RealQuad(a, b)
    f = float(a) + float(b) * math.sqrt(3)
    if abs(f) > 1e-9:
        assert q.sign() == (1 if f > 0 else -1)


def test_realquad_sign_near_zero():
    # convergents of sqrt3: 1351/780 is within 1e-6 of sqrt3
    assert RealQuad(1351, -780).sign() == 1
    assert RealQuad(-1351, 780).sign() == -1
    assert RealQuad(1351 * 780, -780 * 780).sign() == 1


@given(cyclo)
def test_serialize_round_trip(x):
    assert parse_cyclo(x.serialize()) == x


def test_serialize_lowest_terms():
    assert cyc(Fraction(2, 4), -3, 0, Fraction(-6, 8)).serialize() == "1/2,-3/1,0/1,-3/4"


def test_general_expansion_form():
    E = Expansion(cyc(2), ZERO)
    assert E.is_expansive()
    assert expand(E, ZETA) == 2 * ZETA
    assert not Expansion(ONE, ZERO).is_expansive()

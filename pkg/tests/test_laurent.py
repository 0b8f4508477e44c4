"""v-진 Laurent 급수와 2×2 행렬"""

import pytest
from hypothesis import given, settings, strategies as st

from mcp_server_serre.errors import NotInvertibleError, ParameterError
from mcp_server_serre.laurent import (LaurentSeriesV, diagonal, identity, mat_det, mat_equals, mat_inverse,
                                      mat_mul, mat_phi, swap, torus)
from mcp_server_serre.witt import witt_ring

W = witt_ring(7, 1, 3)
W2 = witt_ring(7, 2, 2)


@st.composite
def laurent_poly(draw, lo=-2, hi=4):
    terms = draw(st.dictionaries(st.integers(lo, hi), st.integers(0, W.modulus - 1), max_size=4))
    return LaurentSeriesV.build(W, {e: W.from_int(c) for e, c in terms.items()})


def series(*pairs, hi=None):
    return LaurentSeriesV.build(W, {e: W.from_int(c) for e, c in pairs}, hi)


class TestArithmetic:

    @settings(max_examples=40, deadline=None)
    @given(a=laurent_poly(), b=laurent_poly(), c=laurent_poly())
    def test_ring_axioms(self, a, b, c):
        assert a * b == b * a
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert (a - b) + b == a

    def test_shift_multiplies_by_power_of_v(self):
        a = series((0, 1), (2, 3))
        assert a.shift(-3) == a * LaurentSeriesV.monomial(W, -3)

    def test_truncated_product_precision(self):
        a = series((0, 1), (1, 1), hi=5)
        b = series((-1, 1), hi=3)
        assert (a * b).hi == 3

    @settings(max_examples=40, deadline=None)
    @given(a=laurent_poly(), b=laurent_poly(), ha=st.integers(-2, 5), hb=st.integers(-2, 5))
    def test_truncated_product_agrees_below_precision(self, a, b, ha, hb):
        product = a.truncate(ha) * b.truncate(hb)
        assert product.hi is not None
        assert product.equals(a * b)

    def test_coefficient_beyond_precision(self):
        with pytest.raises(ParameterError):
            series((0, 1), hi=2).coefficient(3)


class TestInverse:

    @pytest.mark.parametrize("terms", [
        [(0, 1), (1, 2), (3, 1)],
        [(-2, 3), (1, 1)],
        [(1, 5), (2, 7)],
    ])
    def test_inverse_up_to_precision(self, terms):
        a = series(*terms)
        one = LaurentSeriesV.constant(W, 1)
        assert (a * a.inverse(6)).equals(one, hi=3)

    def test_non_unit_leading_coefficient(self):
        with pytest.raises(NotInvertibleError):
            series((0, 7), (1, 1)).inverse(4)

    def test_valuation_ignores_p_divisible_terms(self):
        a = series((0, 7), (1, 1))
        assert a.lowest() == 0
        assert a.valuation() == 1


class TestPhi:

    def test_phi_raises_exponents(self):
        a = series((0, 1), (1, 2))
        assert a.phi(7) == series((0, 1), (7, 2))

    def test_phi_twists_coefficients(self):
        c = W2.element([1, 2])
        a = LaurentSeriesV.build(W2, {1: c})
        assert a.phi(7).coefficient(7) == c.frobenius()
        assert a.phi(7, 2).coefficient(7) == c

    def test_phi_scales_precision(self):
        assert series((0, 1), hi=2).phi(7).hi == 20


class TestMatrices:

    def test_torus_determinant(self):
        assert mat_det(torus(W, (2, 3))) == LaurentSeriesV.monomial(W, 5)

    def test_swap_squares_to_identity(self):
        assert mat_equals(mat_mul(swap(W), swap(W)), identity(W))
        assert mat_det(swap(W)) == LaurentSeriesV.constant(W, -1)

    def test_inverse(self):
        A = diagonal(LaurentSeriesV.monomial(W, 1), series((0, 1), (1, 1)))
        assert mat_equals(mat_mul(A, mat_inverse(A, 6)), identity(W), hi=3)

    def test_phi_of_torus(self):
        assert mat_equals(mat_phi(torus(W, (1, 0)), 7), torus(W, (7, 0)))

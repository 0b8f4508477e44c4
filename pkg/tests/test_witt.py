"""절단 Witt 벡터: 환 공리, Teichmüller 곱셈성, Frobenius"""

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from mcp_server_serre.errors import NotInvertibleError, ParameterError
from mcp_server_serre.witt import first_irreducible, teichmuller, witt_ring

RINGS = [(7, 1, 3), (7, 2, 3), (11, 2, 2), (13, 3, 2)]


@st.composite
def witt_triple(draw):
    p, f, N = draw(st.sampled_from(RINGS))
    W = witt_ring(p, f, N)
    coords = st.lists(st.integers(0, W.modulus - 1), min_size=f, max_size=f)
    return W, W.element(draw(coords)), W.element(draw(coords)), W.element(draw(coords))


@st.composite
def residue_pair(draw):
    p, f, _ = draw(st.sampled_from(RINGS))
    F = witt_ring(p, f, 1)
    coords = st.lists(st.integers(0, p - 1), min_size=f, max_size=f)
    return F, F.element(draw(coords)), F.element(draw(coords))


class TestRingAxioms:

    @settings(max_examples=40, deadline=None)
    @given(t=witt_triple())
    def test_associative_and_distributive(self, t):
        W, a, b, c = t
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + (b - a) == b

    @settings(max_examples=40, deadline=None)
    @given(t=witt_triple())
    def test_commutative_with_identity(self, t):
        W, a, b, _ = t
        assert a * b == b * a
        assert a * W.one == a
        assert a + W.zero == a

    @settings(max_examples=40, deadline=None)
    @given(t=witt_triple())
    def test_inverse_of_units(self, t):
        W, a, _, _ = t
        if a.is_unit():
            assert a * a.inverse() == W.one
        else:
            with pytest.raises(NotInvertibleError):
                a.inverse()


    @settings(max_examples=40, deadline=None)
    @given(t=witt_triple())
    def test_coordinate_product_matches_polynomial_remainder(self, t):
        W, a, b, _ = t
        x = sympy.Symbol("t")
        modulus = sympy.Poly(list(W.poly), x)
        rem = (sympy.Poly(list(reversed(a.coords)), x) * sympy.Poly(list(reversed(b.coords)), x)).rem(modulus)
        expected = [int(c) % W.modulus for c in reversed(rem.all_coeffs())]
        expected += [0] * (W.f - len(expected))
        assert W.mul_coords(a.coords, b.coords) == tuple(expected)


class TestTeichmuller:

    def test_known_value(self):
        three = witt_ring(7, 1, 1).from_int(3)
        assert teichmuller(three, 2).coords == (31,)

    @settings(max_examples=40, deadline=None)
    @given(pair=residue_pair())
    def test_multiplicative(self, pair):
        F, r, s = pair
        assert teichmuller(r * s, 3) == teichmuller(r, 3) * teichmuller(s, 3)

    @settings(max_examples=40, deadline=None)
    @given(pair=residue_pair())
    def test_reduces_to_residue_and_is_fixed_by_q_power(self, pair):
        F, r, _ = pair
        t = teichmuller(r, 3)
        assert t.reduce() == r
        assert t ** F.q == t

    def test_precision_must_be_positive(self):
        with pytest.raises(ParameterError):
            teichmuller(witt_ring(7, 1, 1).one, 0)


class TestFrobenius:

    @settings(max_examples=30, deadline=None)
    @given(t=witt_triple())
    def test_ring_homomorphism_of_order_f(self, t):
        W, a, b, _ = t
        assert (a * b).frobenius() == a.frobenius() * b.frobenius()
        assert (a + b).frobenius() == a.frobenius() + b.frobenius()
        assert a.frobenius(W.f) == a

    @settings(max_examples=30, deadline=None)
    @given(t=witt_triple())
    def test_lifts_p_power_map(self, t):
        W, a, _, _ = t
        assert a.frobenius().reduce() == a.reduce() ** W.p


class TestConstruction:

    def test_irreducible_polynomial_is_monic_of_degree_f(self):
        assert first_irreducible(7, 1) == (1, 0)
        poly = first_irreducible(7, 2)
        assert len(poly) == 3 and poly[0] == 1

    def test_rings_are_shared(self):
        assert witt_ring(7, 2, 3) is witt_ring(7, 2, 3)

    def test_invalid_parameters(self):
        with pytest.raises(ParameterError):
            witt_ring(7, 0, 3)

    def test_valuation(self):
        W = witt_ring(7, 1, 4)
        assert W.from_int(49).valuation() == 2
        assert W.zero.valuation() == 4

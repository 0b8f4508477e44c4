"""절단 멱급수, 사슬환 선형대수, 아이디얼 정규형, Hilbert–Samuel, Nakayama"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcp_server_serre.chain_linalg import howell_form, rank_mod_p, solve_mod_p, span_intersection
from mcp_server_serre.deformation_rings import agree, lemma_glue_check
from mcp_server_serre.errors import ChainError, ParameterError
from mcp_server_serre.ideals import (IdealNF, LocalModulePresentation, hilbert_samuel, ideal_intersection,
                                     ideal_quotient, ideal_sum, is_flat, krull_dimension, modular_law_holds,
                                     nakayama_check)
from mcp_server_serre.power_series import series_ring
from mcp_server_serre.witt import witt_ring

SMALL = series_ring(("X", "Y"), witt_ring(7, 1, 2), 3)
SMALL_F = series_ring(("X", "Y"), witt_ring(7, 1, 1), 4)


@st.composite
def small_series(draw, ring=SMALL):
    g = ring.zero()
    for _ in range(draw(st.integers(1, 3))):
        a, b = draw(st.integers(0, 3)), draw(st.integers(0, 3))
        g = g + ring.monomial({"X": a, "Y": b}, draw(st.integers(0, ring.witt.modulus - 1)))
    return g


@st.composite
def small_ideal(draw):
    gens = draw(st.lists(small_series(SMALL_F), min_size=1, max_size=2))
    return IdealNF.generate(SMALL_F, gens)


class TestPowerSeries:

    @settings(max_examples=30, deadline=None)
    @given(a=small_series(), b=small_series(), c=small_series())
    def test_ring_axioms(self, a, b, c):
        assert a * b == b * a
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c

    @settings(max_examples=30, deadline=None)
    @given(a=small_series())
    def test_unit_inverse(self, a):
        u = SMALL.one() + SMALL.var("X") * a
        assert u * u.inverse() == SMALL.one()

    def test_truncation_drops_high_degree(self):
        X = SMALL.var("X")
        assert (X ** 4).is_zero()
        assert not (X ** 3).is_zero()

    def test_relation_ring_identifies_xy_with_p(self):
        ring = series_ring(("X", "Y"), witt_ring(7, 1, 3), 4, (("X", "Y"),))
        assert ring.var("X") * ring.var("Y") == ring.constant(7)

    def test_unknown_variable(self):
        with pytest.raises(ParameterError):
            SMALL.var("Z")


class TestChainLinalg:

    def test_howell_length_counts_p_adic_length(self):
        basis = howell_form(np.array([[7, 0], [0, 1]]), 7, 2, 2)
        assert basis.length() == 3
        assert basis.contains([0, 5])
        assert not basis.contains([1, 0])

    def test_intersection_of_spans(self):
        a = howell_form(np.array([[1, 0]]), 7, 2, 2)
        b = howell_form(np.array([[7, 0], [0, 7]]), 7, 2, 2)
        meet = span_intersection(a, b)
        assert meet.contains([7, 0])
        assert not meet.contains([1, 0])
        assert meet.length() == 1

    def test_rank_mod_p(self):
        assert rank_mod_p(np.array([[1, 2], [2, 4]]), 7, 2) == 1

    def test_solve_or_certify(self):
        A = np.array([[1, 1], [2, 2]])
        x, cert = solve_mod_p(A, np.array([1, 2]), 7)
        assert cert is None
        assert not np.any((A.dot(x) - np.array([1, 2])) % 7)
        x, cert = solve_mod_p(A, np.array([1, 3]), 7)
        assert x is None
        assert not np.any(cert.dot(A) % 7)
        assert int(cert.dot([1, 3])) % 7 == 1


class TestIdeals:

    def test_intersection_of_two_lines(self, Z7_Y):
        Y = Z7_Y.var("Y")
        inter = ideal_intersection(IdealNF.generate(Z7_Y, [Y]), IdealNF.generate(Z7_Y, [Y - 7]))
        assert agree(inter, IdealNF.generate(Z7_Y, [Y * (Y - 7)]))

    def test_sum_contains_p(self, Z7_Y):
        Y = Z7_Y.var("Y")
        total = ideal_sum(IdealNF.generate(Z7_Y, [Y]), IdealNF.generate(Z7_Y, [Y - 7]))
        assert total.contains(Z7_Y.constant(7))
        assert not total.contains(Z7_Y.one())

    def test_gluing_lemma(self):
        assert lemma_glue_check(7)["pass"]

    def test_membership(self):
        X, Y = SMALL.var("X"), SMALL.var("Y")
        I = IdealNF.generate(SMALL, [X, Y])
        assert I.contains(X * Y + 3 * Y)
        assert not I.contains(SMALL.one())

    def test_colon_by_p(self, Z7_Y):
        Y = Z7_Y.var("Y")
        colon = ideal_quotient(IdealNF.generate(Z7_Y, [7 * Y]), IdealNF.generate(Z7_Y, [Z7_Y.constant(7)]))
        assert colon.contains(Y)

    def test_colength_grows_with_smaller_ideal(self, Z7_Y):
        Y = Z7_Y.var("Y")
        assert IdealNF.generate(Z7_Y, [Y ** 2]).colength() > IdealNF.generate(Z7_Y, [Y]).colength()

    @settings(max_examples=15, deadline=None)
    @given(I=small_ideal(), J=small_ideal(), K=small_ideal())
    def test_modular_law(self, I, J, K):
        assert modular_law_holds(I, J, K)

    @settings(max_examples=15, deadline=None)
    @given(I=small_ideal(), J=small_ideal())
    def test_intersection_inside_both(self, I, J):
        meet = ideal_intersection(I, J)
        assert I.contains_ideal(meet) and J.contains_ideal(meet)
        assert ideal_sum(I, J).contains_ideal(I)


class TestFlatness:

    def test_base_equation_is_flat(self, Z7_Y):
        Y = Z7_Y.var("Y")
        flat, witness = is_flat(IdealNF.generate(Z7_Y, [Y * (Y - 7)]))
        assert flat and witness is None

    def test_p_torsion_is_detected(self):
        ring = series_ring(("X", "Y"), witt_ring(7, 1, 4), 6)
        flat, witness = is_flat(IdealNF.generate(ring, [7 * ring.var("Y")]))
        assert not flat
        assert witness is not None

    def test_krull_dimension(self):
        ring = series_ring(("X", "Y"), witt_ring(7, 1, 4), 6)
        X, Y = ring.var("X"), ring.var("Y")
        assert krull_dimension(IdealNF.generate(ring, [Y * (X * Y - 7)])) == 2


class TestHilbertSamuel:

    @pytest.mark.parametrize("build, e", [
        (lambda X, Y: [Y], 1),
        (lambda X, Y: [Y ** 2], 2),
        (lambda X, Y: [X * Y], 2),
        (lambda X, Y: [X ** 2 * Y ** 2], 4),
    ])
    def test_multiplicity_of_plane_curves(self, F7_XY, build, e):
        hs = hilbert_samuel(IdealNF.generate(F7_XY, build(F7_XY.var("X"), F7_XY.var("Y"))))
        assert hs.d == 1
        assert hs.e == e

    def test_regular_ring_of_dimension_two(self, F7_XY):
        hs = hilbert_samuel(IdealNF.zero(F7_XY))
        assert (hs.e, hs.d) == (1, 2)


class TestNakayama:

    def _module(self, gens):
        ring = IdealNF.zero(SMALL_F)
        return LocalModulePresentation(ring, 1, tuple((g,) for g in gens))

    def test_chain_passes(self):
        X = SMALL_F.var("X")
        M = self._module([SMALL_F.one()])
        report = nakayama_check(self._module([X]), M, M)
        assert report.status == "pass"
        assert report.mingen_M == 1

    def test_hypothesis_not_met(self):
        X, Y = SMALL_F.var("X"), SMALL_F.var("Y")
        M1 = self._module([X, Y])
        report = nakayama_check(self._module([X]), M1, self._module([SMALL_F.one()]))
        assert report.mingen_M1 == 2
        assert report.status == "hypothesis-not-met"

    def test_not_a_chain(self):
        X = SMALL_F.var("X")
        with pytest.raises(ChainError):
            nakayama_check(self._module([SMALL_F.one()]), self._module([X]), self._module([SMALL_F.one()]))

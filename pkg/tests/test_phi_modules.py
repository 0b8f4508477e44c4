"""φ-가군: 모양 결정, 보편 전개, 다중유형 표기, 정규화 왕복, 접공간 장애"""

import random

import pytest

from mcp_server_serre.errors import ParameterError, PrecisionError
from mcp_server_serre.laurent import LaurentSeriesV, identity, mat_equals, mat_mul, torus
from mcp_server_serre.phi_modules import (Shape, TangentProblem, base_change, build_residual, case_at,
                                          deformation_display, expand_universal, matrix_inverse,
                                          normalization_roundtrip, random_gauge, root_of, shape_word,
                                          specialize_display, tangent_obstruction, type_free_variables,
                                          type_ring, valuation_recursion)
from mcp_server_serre.weights import CharacterMu, ResidualParams, SignedRootSubset, WeylElt
from mcp_server_serre.witt import witt_ring

ID, S = WeylElt.identity(1), WeylElt.of([1])


def params(text, f=1, mu=((4, 1),)):
    return ResidualParams.default(7, f, CharacterMu.of(mu), SignedRootSubset.parse(f, text))


class TestShapes:

    def test_root_index(self):
        assert [root_of(i, 3) for i in range(3)] == [0, 2, 1]

    @pytest.mark.parametrize("swapped, signs, case", [
        (False, [], 1), (False, [-1], 2), (True, [], 3), (True, [1], 4), (True, [-1], 5),
    ])
    def test_case_table(self, swapped, signs, case):
        assert case_at(swapped, signs) == case

    def test_word_f1(self, params_f1):
        word = shape_word(ID, params_f1)
        assert word.letters[0].shape is Shape.A1
        assert word.parameter_names() == ["X0", "Xalpha", "Xalphap"]
        assert shape_word(S, params_f1).letters[0].shape is Shape.A3

    def test_a2_has_relation(self):
        word = shape_word(ID, params("-w0"))
        assert word.letters[0].case == 2
        assert word.parameter_names() == ["X0", "Y0", "Xalpha", "Xalphap"]
        assert word.relations() == (("X0", "Y0"),)

    def test_f_mismatch(self, params_f1):
        with pytest.raises(ParameterError):
            shape_word(WeylElt.identity(2), params_f1)


class TestResidual:

    @pytest.mark.parametrize("text", ["", "w0", "-w0"])
    def test_determinant_valuation(self, text):
        residual = build_residual(params(text))
        assert residual.det(0).valuation() == 5
        assert residual.is_etale()

    def test_f2_determinants_follow_roots(self):
        pr = params("", f=2, mu=((4, 1), (5, 1)))
        residual = build_residual(pr)
        assert residual.det(0).valuation() == pr.c[root_of(0, 2)] + 1
        assert residual.det(1).valuation() == pr.c[root_of(1, 2)] + 1


class TestExpansion:

    @pytest.mark.parametrize("text", ["", "w0", "-w0"])
    @pytest.mark.parametrize("s", [ID, S])
    def test_universal_family_matches_cases(self, text, s):
        assert expand_universal(s, params(text), N=2, M=3).verified

    @pytest.mark.parametrize("text", ["", "w0", "-w0"])
    def test_display_reduces_to_residual(self, text):
        pr = params(text)
        assert deformation_display(pr, N=2, M=2).residual().equals(build_residual(pr))

    @pytest.mark.parametrize("text", ["", "w0", "-w0"])
    @pytest.mark.parametrize("s", [ID, S])
    def test_display_specializes_to_each_type(self, text, s):
        pr = params(text)
        assert specialize_display(deformation_display(pr, N=2, M=3), s, pr).verified


class TestBaseChange:

    def test_identity_change(self, params_f1):
        family = expand_universal(ID, params_f1, N=2, M=2).family
        assert base_change(family, [identity(family.ring)]).equals(family)

    def test_torus_inverse_is_exact(self):
        W = witt_ring(7, 1, 2)
        T = torus(W, (3, -1))
        assert mat_equals(mat_mul(T, matrix_inverse(T)), identity(W))

    def test_gauge_keeps_residual(self, params_f1):
        word = shape_word(ID, params_f1)
        ring = type_ring(word, 2, 2)
        family = expand_universal(ID, params_f1, N=2, M=2).family
        moved = base_change(family, random_gauge(word, ring, random.Random(1)))
        assert moved.residual().equals(family.residual())


class TestNormalization:

    @pytest.mark.parametrize("s", [ID, S])
    def test_round_trip(self, params_f1, s):
        report = normalization_roundtrip(s, params_f1, seed=0, N=2, M=2)
        assert report["recovered"]
        assert report["pass"]


class TestTangent:

    @pytest.mark.parametrize("irhomu, f, direction, status", [
        ("", 1, {}, "SOLVABLE"),
        ("", 1, {"Y0": 1}, "OBSTRUCTED"),
        ("", 1, {"X0": 1}, "SOLVABLE"),
        ("", 1, {"X0": 1, "Y0": 3}, "OBSTRUCTED"),
        ("", 1, {"Xalpha": 1, "Xalphap": 2}, "SOLVABLE"),
        ("w0", 1, {"Y0": 1}, "SOLVABLE"),
        ("w0", 1, {"X0": 1}, "SOLVABLE"),
        ("-w0", 1, {"Y0": 1}, "SOLVABLE"),
        ("-w0", 1, {"X0": 1}, "SOLVABLE"),
        ("", 2, {"X0": 1}, "SOLVABLE"),
        ("", 2, {"X1": 1}, "SOLVABLE"),
        ("", 2, {"Y0": 1}, "OBSTRUCTED"),
        ("", 2, {"Y1": 1}, "OBSTRUCTED"),
        ("w0,w1", 2, {"X1": 1}, "SOLVABLE"),
        ("w0,w1", 2, {"Y0": 1, "Y1": 1}, "SOLVABLE"),
        ("w0", 2, {"Y0": 1}, "SOLVABLE"),
        ("w0", 2, {"Y1": 1}, "OBSTRUCTED"),
        ("-w1", 2, {"X0": 1, "Y1": 2}, "SOLVABLE"),
        ("-w1", 2, {"Y0": 1, "Y1": 2}, "OBSTRUCTED"),
    ])
    def test_acceptance_grid(self, irhomu, f, direction, status):
        mu = ((4, 1),) if f == 1 else ((4, 1), (5, 1))
        verdict = tangent_obstruction(TangentProblem.from_direction(params(irhomu, f, mu), direction))
        assert verdict.status == status
        if verdict.solvable:
            assert verdict.witness is not None
            assert max(verdict.pole_orders) <= 0
            assert all(e >= 0 for D in verdict.witness for row in D for x in row for e, _ in x.terms)
        else:
            assert verdict.certificate

    def test_zero_direction_has_zero_witness(self, params_f1):
        verdict = tangent_obstruction(TangentProblem.from_direction(params_f1, {}))
        assert verdict.type_components == {}
        assert all(x.is_zero() for D in verdict.witness for row in D for x in row)

    def test_type_free_variables(self):
        assert type_free_variables(params("")) == ["X0", "Xalpha", "Xalphap"]
        assert type_free_variables(params("-w0")) == ["X0", "Y0", "Xalpha", "Xalphap"]
        assert type_free_variables(params("w1", 2, ((4, 1), (5, 1)))) == ["X0", "X1", "Y1", "Xalpha", "Xalphap"]

    def test_unknown_variable(self, params_f1):
        with pytest.raises(ParameterError):
            TangentProblem.from_direction(params_f1, {"Z9": 1})

    def test_window_too_small(self, params_f1):
        problem = TangentProblem.from_direction(params_f1, {"X0": 1}, window=(0, 3))
        with pytest.raises(PrecisionError):
            tangent_obstruction(problem)

    def test_pole_recursion(self):
        assert valuation_recursion(7, (4,), 1)["contradiction"]
        assert not valuation_recursion(7, (4,), 0)["contradiction"]
        assert valuation_recursion(7, (4, 5), 1)["cycle_bound"] == 2 + 7 * (2 + 7 * 0 - 1)
        with pytest.raises(ParameterError):
            valuation_recursion(7, (6,), 1)


def test_laurent_entries_live_over_type_ring(params_f1):
    family = expand_universal(ID, params_f1, N=2, M=2).family
    assert isinstance(family[0][0][0], LaurentSeriesV)
    assert family[0][0][0].ring == family.ring

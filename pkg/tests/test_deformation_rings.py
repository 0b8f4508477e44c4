"""다중유형 변형환: 표시, Zariski 폐포, 횡단성, 접합 완전열, 중복도"""

import pytest

from mcp_server_serre.deformation_rings import (agree, base_ring, comparison_level, glue_sequence_check,
                                                multiplicity_compare, multitype_quotient, single_type_reports,
                                                transversality, type_chart_ideal, type_subset,
                                                zariski_closure_check)
from mcp_server_serre.errors import ParameterError
from mcp_server_serre.weights import SignedRootSubset, WeylElt


def S(text, f=1):
    return SignedRootSubset.parse(f, text)


@pytest.fixture(scope="module")
def base_empty():
    return base_ring(S(""), 7)


@pytest.fixture(scope="module")
def base_plus():
    return base_ring(S("w0"), 7)


class TestPresentation:

    def test_base_equations(self, base_empty, base_plus):
        assert [n for n, _ in base_empty.equations] == ["Y0*(Y0-p)"]
        assert [n for n, _ in base_plus.equations] == ["Y0*(X0*Y0-p)"]
        assert comparison_level(base_empty.ambient) == 4

    @pytest.mark.parametrize("irhomu, I, name", [
        ("", "w0", "Y0"),
        ("", "-w0", "Y0-p"),
        ("w0", "w0", "Y0"),
        ("w0", "-w0", "X0*Y0-p"),
        ("-w0", "w0", "X0*Y0-p"),
        ("-w0", "-w0", "Y0"),
    ])
    def test_quotient_equation_table(self, irhomu, I, name):
        ring = multitype_quotient(base_ring(S(irhomu), 7), S(I))
        assert ring.equations[-1][0] == name
        assert ring.is_single_type

    def test_two_roots(self):
        base = base_ring(S("-w1", 2), 7)
        assert [n for n, _ in base.equations] == ["Y0*(Y0-p)", "Y1*(X1*Y1-p)"]
        assert len(multitype_quotient(base, S("w0", 2)).types) == 2

    def test_full_pair_rejected(self, base_empty):
        with pytest.raises(ParameterError):
            base_ring(S("w0,-w0"), 7)
        with pytest.raises(ParameterError):
            multitype_quotient(base_empty, S("w0,-w0"))

    def test_quotient_needs_base(self, base_empty):
        with pytest.raises(ParameterError):
            multitype_quotient(multitype_quotient(base_empty, S("w0")), S("-w0"))

    def test_type_subset(self):
        assert type_subset(WeylElt.of([0, 1])) == S("w0,-w1", 2)


class TestSingleTypes:

    def test_closure_of_two_types(self, base_empty, base_plus):
        assert zariski_closure_check(base_empty, S(""))["pass"]
        assert zariski_closure_check(base_plus, S(""))["pass"]

    def test_single_types_flat_of_dimension_f_plus_1(self, base_empty):
        reports = single_type_reports(base_empty, S(""))
        assert len(reports) == 2
        for rep in reports:
            assert rep["flat"] and rep["krull_dimension"] == 2
            assert rep["matches_type_chart"]
            assert rep["pass"]

    def test_type_chart(self, base_plus):
        chart = type_chart_ideal(base_plus, WeylElt.of([1]))
        assert agree(chart, multitype_quotient(base_plus, S("-w0")).ideal)

    def test_transversal(self, base_empty):
        t1 = multitype_quotient(base_empty, S("w0"))
        t2 = multitype_quotient(base_empty, S("-w0"))
        report = transversality(t1, t2)
        assert report["sum_contains_p"] and report["quotient_nonzero"]
        assert report["distinct_mod_p2"]
        assert report["pass"]

    def test_transversality_needs_two_types(self, base_empty):
        t1 = multitype_quotient(base_empty, S("w0"))
        with pytest.raises(ParameterError):
            transversality(t1, t1)
        with pytest.raises(ParameterError):
            transversality(t1, base_empty)


class TestGluing:

    def test_sequence_is_exact(self, base_empty):
        report = glue_sequence_check(base_empty, S(""), 0)
        assert report["kernel_matches"] and report["cokernel_is_mod_p"]
        assert not any(report["alternating_sums"])
        assert report["pass"]

    def test_precondition(self, base_plus):
        with pytest.raises(ParameterError):
            glue_sequence_check(base_plus, S(""), 0)

    def test_multiplicities(self, base_empty):
        report = multiplicity_compare(base_empty, S(""), 0)
        assert report["e_plus"]["e"] == report["e_minus"]["e"] == 1
        assert report["e_I"]["e"] == 2
        assert report["pass"]

"""등급 골격, 정수 골격, 접합 그림자, 덮개 검사"""

import pytest

from mcp_server_serre.errors import CancelledError, CancelToken, ParameterError
from mcp_server_serre.skeletons import (build_skeleton, covering_set_check, gluing_shadow, integral_skeleton,
                                        reduction_consistency, slice_multiplicity_free)
from mcp_server_serre.weights import ResidualParams, SignedRootSubset, sigma_empty, weight_set

EMPTY1 = SignedRootSubset.empty(1)


def W_rho(mu, text):
    return weight_set(ResidualParams.default(7, mu.f, mu, SignedRootSubset.parse(mu.f, text)))


class TestGradedSkeleton:

    def test_f1_empty(self, mu_f1):
        sk = build_skeleton(mu_f1, EMPTY1, 7)
        assert sk.length() == sk.expected_length() == 4
        assert sk.stratum_sizes() == [1, 2, 1]
        assert sk.edge_counts_ok()

    def test_pair_collapses_to_sigma_empty(self, mu_f1):
        sk = build_skeleton(mu_f1, EMPTY1, 7)
        top = sk.slot(SignedRootSubset.parse(1, "w0,-w0"))
        assert top.weight == sigma_empty(mu_f1, 7)
        assert sk.weight_multiset()[sigma_empty(mu_f1, 7)] == 2

    def test_pair_cancellation_multiplicity_f2(self, mu_f2):
        sk = build_skeleton(mu_f2, SignedRootSubset.empty(2), 7)
        assert sk.weight_multiset()[sigma_empty(mu_f2, 7)] == 4

    @pytest.mark.parametrize("text, length, strata", [
        ("", 16, [1, 4, 6, 4, 1]),
        ("w0", 8, [1, 3, 3, 1]),
        ("w0,-w1", 4, [1, 2, 1]),
    ])
    def test_f2_lengths(self, mu_f2, text, length, strata):
        sk = build_skeleton(mu_f2, SignedRootSubset.parse(2, text), 7)
        assert sk.length() == length
        assert sk.stratum_sizes() == strata

    def test_filtration_and_slice(self, mu_f2):
        sk = build_skeleton(mu_f2, SignedRootSubset.empty(2), 7)
        assert len(sk.fil([0, 0])) == 16
        assert len(sk.fil([1, 0])) == 12
        assert {s.level for s in sk.slice([1, 0])} == {1, 2}

    @pytest.mark.parametrize("kvec", [[0, 0], [1, 0], [0, 1], [1, 1]])
    def test_slice_multiplicity_free(self, mu_f2, kvec):
        sk = build_skeleton(mu_f2, SignedRootSubset.empty(2), 7)
        report = slice_multiplicity_free(sk, kvec)
        assert report["size"] > 0
        assert report["pass"], report["repeated"]

    def test_slice_range(self, mu_f2):
        sk = build_skeleton(mu_f2, SignedRootSubset.empty(2), 7)
        with pytest.raises(ParameterError):
            slice_multiplicity_free(sk, [3, 0])

    def test_f_mismatch(self, mu_f1):
        with pytest.raises(ParameterError):
            build_skeleton(mu_f1, SignedRootSubset.empty(2), 7)

    def test_cancellation(self, mu_f2):
        token = CancelToken()
        token.cancel()
        with pytest.raises(CancelledError):
            build_skeleton(mu_f2, SignedRootSubset.empty(2), 7, token)


class TestIntegralSkeleton:

    @pytest.mark.parametrize("text, rank", [("", 14), ("w0", 8), ("-w0", 6)])
    def test_rank(self, mu_f1, text, rank):
        assert integral_skeleton(mu_f1, SignedRootSubset.parse(1, text), 7).rank() == rank

    @pytest.mark.parametrize("text", ["", "w0", "-w0"])
    def test_reduction_matches_graded(self, mu_f1, text):
        report = reduction_consistency(mu_f1, SignedRootSubset.parse(1, text), 7)
        assert report["pass"]
        assert report["only_integral"] == report["only_graded"] == []

    @pytest.mark.parametrize("f, text", [(1, ""), (2, ""), (2, "w0")])
    def test_type_ranks(self, mu_f1, mu_f2, f, text):
        mu = mu_f1 if f == 1 else mu_f2
        skeleton = integral_skeleton(mu, SignedRootSubset.parse(f, text), 7)
        q = 7 ** f
        for s in skeleton.types:
            assert skeleton.type_rank(s) == (q + 1 if s.is_principal() else q - 1)
            assert len(skeleton.constituents[s]) == 2 ** f

    def test_reduction_f2(self, mu_f2):
        assert reduction_consistency(mu_f2, SignedRootSubset.parse(2, "-w1"), 7)["pass"]


class TestGluingShadow:

    def test_f1(self, mu_f1):
        report = gluing_shadow(mu_f1, EMPTY1, 0, 7)
        assert report["expected_torsion"] == 1
        assert report["ranks"] == {"A": 14, "B_plus": 8, "B_minus": 6}
        assert report["pass"]

    def test_f2(self, mu_f2):
        report = gluing_shadow(mu_f2, SignedRootSubset.parse(2, "w1"), 0, 7)
        assert report["expected_torsion"] == 2
        assert report["lengths_mod_p"]["C"] == 2
        assert report["pass"]

    @pytest.mark.parametrize("text, j", [("w0", 0), ("", 1), ("w0,-w0", 0)])
    def test_invalid(self, mu_f1, text, j):
        with pytest.raises(ParameterError):
            gluing_shadow(mu_f1, SignedRootSubset.parse(1, text), j, 7)


class TestCoveringSet:

    def test_every_level(self, mu_f1):
        report = covering_set_check(mu_f1, EMPTY1, SignedRootSubset.parse(1, "w0"), 7, W_rho(mu_f1, "w0"))
        assert report["pass"]
        assert report["checked"] > 0

    def test_empty_choice_fails(self, mu_f1):
        report = covering_set_check(mu_f1, EMPTY1, SignedRootSubset.parse(1, "w0"), 7, W_rho(mu_f1, "w0"),
                                    k=0, chosen=[])
        assert not report["pass"]
        assert report["counterexamples"][0]["reason"] == "chosen set misses W(rho) at level k"

    def test_hypothesis(self, mu_f1):
        with pytest.raises(ParameterError):
            covering_set_check(mu_f1, EMPTY1, EMPTY1, 7, W_rho(mu_f1, ""))

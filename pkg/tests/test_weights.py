"""가중치 조합론: 부호 근 부분집합, 유형, σ_J, 층 개수"""

import pytest
from hypothesis import given, settings, strategies as st

from mcp_server_serre.errors import ParameterError
from mcp_server_serre.weights import (CharacterMu, ResidualParams, SerreWeightSym, SignedRootSubset, WeylElt,
                                      admissible_subsets, is_generic, jh_of_type, orientation_solve,
                                      reconcile_recipe, sigma_empty, sigma_J, stratum_counts, type_of_weight_set,
                                      types_for, weight_set)
from mcp_server_serre.witt import residue_field


@st.composite
def weyl(draw, f=None):
    f = f or draw(st.integers(1, 4))
    return WeylElt(tuple(draw(st.lists(st.booleans(), min_size=f, max_size=f))))


class TestParsing:

    def test_signed_subset(self):
        J = SignedRootSubset.parse(2, "w0,-w1")
        assert (0, 1) in J and (1, -1) in J
        assert J.label() == "w0,-w1"
        assert J.multidegree() == (1, 1)

    @pytest.mark.parametrize("text", ["", "none", "{}"])
    def test_empty_spellings(self, text):
        assert len(SignedRootSubset.parse(3, text)) == 0

    @pytest.mark.parametrize("text", ["w2", "x0", "w"])
    def test_rejects_bad_roots(self, text):
        with pytest.raises(ParameterError):
            SignedRootSubset.parse(2, text)

    def test_weyl_spellings(self):
        assert WeylElt.parse("Id,s") == WeylElt.parse("01") == WeylElt.of([0, 1])

    def test_cancel_pairs(self):
        J = SignedRootSubset.parse(2, "w0,-w0,w1")
        assert J.has_full_pair()
        assert J.cancel_pairs() == SignedRootSubset.parse(2, "w1")


class TestGenericity:

    def test_generic_and_not(self):
        assert is_generic(CharacterMu.of([(4, 1)]), 7)
        assert not is_generic(CharacterMu.of([(3, 1)]), 7)

    def test_sigma_rejects_non_generic(self):
        with pytest.raises(ParameterError):
            sigma_J(CharacterMu.of([(3, 1)]), SignedRootSubset.empty(1), 7)

    @pytest.mark.parametrize("mu, irhomu", [
        ([(6, 1)], ""),
        ([(4, 2)], ""),
        ([(4, 1)], "w0,-w0"),
    ])
    def test_residual_params_validation(self, mu, irhomu):
        with pytest.raises(ParameterError):
            ResidualParams.default(7, 1, CharacterMu.of(mu), SignedRootSubset.parse(1, irhomu))

    def test_a_must_vanish_on_irhomu(self, mu_f1):
        F = residue_field(7, 1)
        with pytest.raises(ParameterError):
            ResidualParams(7, 1, mu_f1, SignedRootSubset.parse(1, "w0"), (F.one,), F.one, F.one)


class TestWeylGroup:

    @settings(max_examples=50, deadline=None)
    @given(s=weyl())
    def test_orientation_solution(self, s):
        w, s_tau = orientation_solve(s)
        assert not w.components[0]
        check = w.frobenius_inverse() * s * w
        assert check.components == (s_tau,) + (False,) * (s.f - 1)
        assert s_tau == bool(s.parity())

    @settings(max_examples=50, deadline=None)
    @given(s=weyl())
    def test_frobenius_round_trip(self, s):
        assert s.frobenius().frobenius_inverse() == s
        assert s * s.inverse() == WeylElt.identity(s.f)


class TestTypes:

    @pytest.mark.parametrize("f, text, count", [(1, "", 2), (2, "", 4), (2, "w0", 2), (3, "w0,-w2", 2)])
    def test_type_count(self, f, text, count):
        I = SignedRootSubset.parse(f, text)
        types = types_for(CharacterMu.eta(f), I)
        assert len(types) == count == 2 ** (f - len(I))

    def test_pinned_components(self):
        for w in types_for(CharacterMu.eta(2), SignedRootSubset.parse(2, "w0,-w1")):
            assert w.components == (False, True)

    def test_full_pair_rejected(self):
        with pytest.raises(ParameterError):
            types_for(CharacterMu.eta(1), SignedRootSubset.parse(1, "w0,-w0"))

    def test_admissible_subsets_avoid_I(self):
        I = SignedRootSubset.parse(2, "w0")
        subs = admissible_subsets(I)
        assert len(subs) == 8
        assert all((0, 1) not in J for J in subs)

    def test_type_of_weight_set(self):
        assert type_of_weight_set(SignedRootSubset.parse(2, "w1,-w0")) == WeylElt.of([0, 1])


class TestStrata:

    @pytest.mark.parametrize("f, text, counts", [
        (1, "", [1, 2, 1]),
        (2, "", [1, 4, 6, 4, 1]),
        (1, "w0", [1, 1]),
        (2, "-w1", [1, 3, 3, 1]),
    ])
    def test_stratum_counts(self, f, text, counts):
        assert stratum_counts(SignedRootSubset.parse(f, text)) == counts

    def test_total_is_number_of_types_times_components(self):
        I = SignedRootSubset.parse(3, "w1")
        assert sum(stratum_counts(I)) == 4 ** 2 * 2


class TestSerreWeights:

    def test_sigma_empty(self, mu_f1):
        sigma = sigma_empty(mu_f1, 7)
        assert (sigma.r, sigma.d) == ((2,), 1)
        assert sigma.label() == "F(3,1)"
        assert sigma.dimension() == 3

    def test_digits_must_be_restricted(self):
        with pytest.raises(ParameterError):
            SerreWeightSym.make(7, [7], 0)

    def test_torus_weights_count_dimension(self):
        sigma = SerreWeightSym.make(7, [2, 3], 5)
        assert len(sigma.torus_weights()) == sigma.dimension() == 12

    def test_jh_of_principal_type_f1(self, mu_f1):
        pairs = jh_of_type(WeylElt.identity(1), mu_f1, 7)
        assert len(pairs) == 2
        assert pairs[0][1] == sigma_empty(mu_f1, 7)
        assert pairs[1][1] == SerreWeightSym.make(7, [4], 3)

    def test_jh_count_f2(self, mu_f2):
        pairs = jh_of_type(WeylElt.of([0, 1]), mu_f2, 7)
        assert len(pairs) == 4
        assert len({sigma for _, sigma in pairs}) == 4

    def test_weight_set_sizes(self, mu_f1, params_f1):
        assert weight_set(params_f1) == [sigma_empty(mu_f1, 7)]
        both = ResidualParams.default(7, 1, mu_f1, SignedRootSubset.parse(1, "w0"))
        assert len(weight_set(both)) == 2

    def test_closed_formula_matches_oracle(self, mu_f1):
        report = reconcile_recipe(mu_f1, 7)
        assert report["set_match"]
        assert report["mismatches"] == []

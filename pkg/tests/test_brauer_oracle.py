"""GL₂(F_q) 지표 판정 기준과 분해표 디스크 캐시"""

import json
from collections import Counter

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from mcp_server_serre.brauer_oracle import (ClassData, OracleCacheService, all_types, brauer_character,
                                            build_table, character_table, cuspidal_character, decompose,
                                            inner_product, ordinary_character, principal_series_character)
from mcp_server_serre.errors import CacheError, ParameterError
from mcp_server_serre.weights import CharacterMu, SerreWeightSym, WeylElt


@st.composite
def generic_column(draw):
    """(p, s, μ), 1 < ⟨μ-η, α^{(i)}⟩ < p-2"""
    p = draw(st.sampled_from([7, 11]))
    f = draw(st.sampled_from([1, 2]))
    pairs = []
    for _ in range(f):
        b = draw(st.integers(0, p - 2))
        pairs.append((b + draw(st.integers(3, p - 2)), b))
    s = WeylElt.of(draw(st.lists(st.booleans(), min_size=f, max_size=f)))
    return p, s, CharacterMu.of(pairs)


class TestCharacters:

    def test_table_size(self):
        assert len(character_table(7, 1)) == 48
        assert len(character_table(3, 2)) == 80

    @pytest.mark.parametrize("chi", [
        principal_series_character(0, 1, 3),
        cuspidal_character(1, 3),
    ])
    def test_irreducible_norm(self, chi):
        classes = ClassData(3, 1)
        norm = inner_product(chi, chi, classes)
        assert norm.is_integer()
        assert norm.to_int() == classes.group_order

    def test_orthogonal(self):
        classes = ClassData(3, 1)
        cross = inner_product(principal_series_character(0, 1, 3), cuspidal_character(1, 3), classes)
        assert cross.is_integer() and cross.to_int() == 0

    def test_class_sizes_sum_to_group_order(self):
        classes = ClassData(5, 1)
        assert sum(size for _, size in classes.classes()) == classes.group_order

    def test_nonsplit_exponents(self):
        sigma = SerreWeightSym.make(7, [4], 3)
        assert sorted(sigma.nonsplit_weights()) == [4, 28, 34, 40, 46]
        assert brauer_character(sigma).nonsplit_counter() == Counter([4, 28, 34, 40, 46])

    @pytest.mark.parametrize("r, d", [([2], 1), ([4], 3), ([3, 5], 17), ([6, 0], 40)])
    def test_nonsplit_exponents_restrict_to_centre(self, r, d):
        sigma = SerreWeightSym.make(7, r, d)
        q = sigma.q
        assert {n % (q - 1) for n in sigma.nonsplit_weights()} == {(sigma.R() + 2 * sigma.d) % (q - 1)}


class TestDecompose:

    def test_principal_type_f1(self, mu_f1):
        assert decompose(WeylElt.identity(1), mu_f1, 7) == [
            SerreWeightSym.make(7, [2], 1),
            SerreWeightSym.make(7, [4], 3),
        ]

    def test_cuspidal_type_f1(self, mu_f1):
        assert decompose(WeylElt.of([1]), mu_f1, 7) == [
            SerreWeightSym.make(7, [2], 1),
            SerreWeightSym.make(7, [2], 4),
        ]

    @settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(column=generic_column())
    def test_generic_column_reproduces_character(self, column):
        p, s, mu = column
        factors = decompose(s, mu, p)
        chi = ordinary_character(s, mu, p)
        torus, nonsplit = Counter(), Counter()
        for sigma in factors:
            beta = brauer_character(sigma)
            torus.update(beta.torus_counter())
            nonsplit.update(beta.nonsplit_counter())
        assert torus == chi.torus_counter()
        assert nonsplit == chi.nonsplit_counter()
        assert max(Counter(factors).values()) == 1

    def test_dimension_sums(self, mu_f1, mu_f2):
        assert build_table(7, 1, [mu_f1]).dimension_sums() == [8, 6]
        table = build_table(7, 2, [mu_f2])
        assert table.dimension_sums() == [50, 48, 48, 50]
        assert table.is_multiplicity_free()

    def test_each_column_has_2_to_the_f_factors(self, mu_f2):
        for s in all_types(2):
            assert len(decompose(s, mu_f2, 7)) == 4

    def test_mismatched_f(self, mu_f1):
        with pytest.raises(ParameterError):
            decompose(WeylElt.identity(2), mu_f1, 7)

    def test_out_of_range(self):
        with pytest.raises(ParameterError):
            decompose(WeylElt.identity(1), CharacterMu.of([(4, 1)]), 17)

    def test_non_generic(self):
        with pytest.raises(ParameterError):
            decompose(WeylElt.identity(1), CharacterMu.of([(3, 1)]), 7)


class TestOracleCache:

    @pytest.fixture
    def cache(self, cache_dir):
        service = OracleCacheService(cache_dir)
        service.purge()
        return service

    def test_layout_and_listing(self, cache, mu_f1):
        s = WeylElt.identity(1)
        decompose(s, mu_f1, 7)
        path = cache.path_for(7, s, mu_f1)
        assert path.exists()
        assert path.parent.name == "p7_f1"
        assert path.stem == cache.key_for(7, s, mu_f1)
        [entry] = cache.entries()
        assert entry["ok"] and entry["weights"] == 2

    def test_hit_is_served_from_disk(self, cache, mu_f1):
        s = WeylElt.identity(1)
        first = decompose(s, mu_f1, 7)
        assert cache.get(7, s, mu_f1) == first

    def test_write_once(self, cache, mu_f1):
        s = WeylElt.identity(1)
        decompose(s, mu_f1, 7)
        path = cache.path_for(7, s, mu_f1)
        before = path.read_text(encoding="utf-8")
        cache.put(7, s, mu_f1, [SerreWeightSym.make(7, [0], 0)])
        assert path.read_text(encoding="utf-8") == before

    def test_memo_hit_does_not_touch_disk(self, cache, mu_f1):
        s = WeylElt.identity(1)
        decompose(s, mu_f1, 7)
        cache.path_for(7, s, mu_f1).unlink()
        decompose(s, mu_f1, 7)
        assert not cache.path_for(7, s, mu_f1).exists()

    def test_verify_clean(self, cache, mu_f1):
        decompose(WeylElt.identity(1), mu_f1, 7)
        report = cache.verify(seed=3)
        assert report["checked"] == 1
        assert report["corrupt"] == [] and report["mismatched"] == []
        assert len(report["recomputed"]) == 1

    def test_tampered_entry(self, cache, mu_f1):
        s = WeylElt.identity(1)
        decompose(s, mu_f1, 7)
        path = cache.path_for(7, s, mu_f1)
        entry = json.loads(path.read_text(encoding="utf-8"))
        entry["weights"][0]["d"] = 5
        path.write_text(json.dumps(entry), encoding="utf-8")
        assert cache.verify()["corrupt"] == [path.stem]
        assert not cache.entries()[0]["ok"]
        with pytest.raises(CacheError):
            cache.get(7, s, mu_f1)

    def test_purge(self, cache, mu_f1):
        for s in all_types(1):
            decompose(s, mu_f1, 7)
        assert cache.purge() == 2
        assert cache.paths() == []

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdbench.checks import (
    Order,
    Presence,
    Table,
    UnitTest,
    eval_order,
    eval_presence,
    eval_table,
    run_test,
)
from mdbench.normalize import NormalizationProfile


def make_test(kind, max_diffs=0, profile=None, category="baseline"):
    return UnitTest(
        id="t1",
        doc_id="doc_p0",
        category=category,
        kind=kind,
        max_diffs=max_diffs,
        profile=profile or NormalizationProfile(),
    )


class TestUnitTestValidation:
    def test_bad_category(self):
        with pytest.raises(ValueError):
            make_test(Presence("x"), category="math")

    def test_negative_budget(self):
        with pytest.raises(ValueError):
            make_test(Presence("x"), max_diffs=-1)

    def test_table_needs_relations(self):
        with pytest.raises(ValueError):
            Table(anchor="a", relations={})

    def test_table_rejects_unknown_relation(self):
        with pytest.raises(ValueError):
            Table(anchor="a", relations={"diagonal": "x"})


class TestEvalPresence:
    def test_harmonization_makes_match(self):
        profile = NormalizationProfile(unicode_harmonize=True)
        test = make_test(Presence("Bibliothèque nationale de France"), profile=profile)
        candidate = (
            "l’exposition – Bibliothèque nationale de France – 1925"
        )
        result = eval_presence(test, candidate)
        assert result.passed
        assert result.matched_span is not None

    def test_absence_satisfied(self):
        test = make_test(Presence("page 3", must_appear=False))
        assert eval_presence(test, "rien ici").passed

    def test_absence_violated(self):
        test = make_test(Presence("page 3", must_appear=False))
        result = eval_presence(test, "voir page 3 pour suite")
        assert not result.passed
        assert "forbidden" in result.explanation

    def test_one_substitution_exceeds_zero_budget(self):
        test = make_test(Presence("Total 42"))
        result = eval_presence(test, "Total 43")
        assert not result.passed
        assert "distance 1" in result.explanation

    def test_budget_allows_near_miss(self):
        test = make_test(Presence("Total 42"), max_diffs=1)
        assert eval_presence(test, "Total 43").passed

    def test_invalid_when_target_normalizes_away(self):
        profile = NormalizationProfile(alnum_filter=True)
        test = make_test(Presence("!!!"), profile=profile)
        result = eval_presence(test, "whatever")
        assert result.invalid
        assert not result.passed
        assert "invalid" in result.explanation

    def test_matched_span_offsets_are_into_normalized_text(self):
        profile = NormalizationProfile(markup_cleanup=True)
        test = make_test(Presence("bc"), profile=profile)
        result = eval_presence(test, "**a**bc")
        assert result.matched_span == (1, 3)


class TestEvalOrder:
    def test_in_order(self):
        test = make_test(Order("Chapitre 1", "Chapitre 2"))
        result = eval_order(test, "... Chapitre 1 ... Chapitre 2 ...")
        assert result.passed

    def test_reversed(self):
        test = make_test(Order("Chapitre 1", "Chapitre 2"))
        result = eval_order(test, "... Chapitre 2 ... Chapitre 1 ...")
        assert not result.passed
        assert "order violated" in result.explanation

    def test_missing_span(self):
        test = make_test(Order("Chapitre 1", "Chapitre 2"))
        result = eval_order(test, "... Chapitre 1 seulement ...")
        assert not result.passed
        assert "span missing" in result.explanation
        assert "after" in result.explanation

    def test_repeated_running_head_still_passes(self):
        # "titre" recurs (page header); earliest before vs latest after
        test = make_test(Order("titre", "fin"))
        assert eval_order(test, "titre ... fin ... titre").passed

    def test_same_span_cannot_order_both_ways(self):
        t_ab = make_test(Order("alpha", "beta"))
        t_ba = make_test(Order("beta", "alpha"))
        doc = "alpha ... beta"
        assert eval_order(t_ab, doc).passed
        assert not eval_order(t_ba, doc).passed

    def test_invalid_empty_before(self):
        profile = NormalizationProfile(alnum_filter=True)
        test = make_test(Order("...", "fin"), profile=profile)
        assert eval_order(test, "x").invalid


CAPITALS = "| Capital | Pays |\n|---|---|\n| Paris | France |"


class TestEvalTable:
    def test_relations_satisfied(self):
        test = make_test(
            Table("Paris", {"right": "France", "top_heading": "Capital"}),
            category="long_table",
        )
        assert eval_table(test, CAPITALS).passed

    def test_no_table(self):
        test = make_test(Table("Paris", {"right": "France"}), category="long_table")
        result = eval_table(test, "aucun tableau")
        assert not result.passed
        assert result.explanation == "no table found"

    def test_wrong_relation_reports_found_value(self):
        test = make_test(Table("Paris", {"up": "Pays"}), category="long_table")
        result = eval_table(test, CAPITALS)
        assert not result.passed
        assert "Capital" in result.explanation

    def test_edge_relation_fails(self):
        test = make_test(Table("Capital", {"up": "x"}), category="long_table")
        result = eval_table(test, CAPITALS)
        assert not result.passed
        assert "table edge" in result.explanation

    def test_anchor_missing(self):
        test = make_test(Table("Lyon", {"right": "France"}), category="long_table")
        result = eval_table(test, CAPITALS)
        assert not result.passed
        assert "anchor" in result.explanation

    def test_any_anchor_occurrence_may_satisfy(self):
        doc = "| v | a |\n| x | v |\n| q | ok |"
        # two cells say "v"; only the one at (1,1) has "ok" below it
        test = make_test(Table("v", {"down": "ok"}), category="long_table")
        assert eval_table(test, doc).passed

    def test_fuzzy_anchor_match(self):
        test = make_test(
            Table("Parie", {"right": "France"}), max_diffs=1, category="long_table"
        )
        assert eval_table(test, CAPITALS).passed

    def test_normalization_applies_to_cells(self):
        profile = NormalizationProfile(unicode_harmonize=True, ascii_projection=True)
        test = make_test(
            Table("Ete", {"right": "chaud"}), profile=profile, category="long_table"
        )
        assert eval_table(test, "| Été | chaud |").passed


class TestRunTest:
    def test_dispatch_and_model_stamp(self):
        doc = "Chapitre 1 ... Chapitre 2"
        cases = [
            make_test(Presence("Chapitre 1")),
            make_test(Order("Chapitre 1", "Chapitre 2")),
            make_test(Table("Paris", {"right": "France"}), category="long_table"),
        ]
        for test in cases[:2]:
            result = run_test(test, doc, "model-x")
            assert result.model_id == "model-x"
            assert result.passed
        result = run_test(cases[2], CAPITALS, "model-x")
        assert result.model_id == "model-x" and result.passed

    def test_dispatch_propagates_invalid(self):
        profile = NormalizationProfile(alnum_filter=True)
        test = make_test(Presence("??"), profile=profile)
        assert run_test(test, "x", "m").invalid


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(
        st.text(alphabet="abc ", min_size=1, max_size=6).filter(str.strip),
        st.text(alphabet="abc ", max_size=30),
        st.integers(min_value=0, max_value=3),
    )
    def test_presence_budget_monotone(self, target, candidate, k):
        t_k = make_test(Presence(target), max_diffs=k)
        t_k1 = make_test(Presence(target), max_diffs=k + 1)
        if eval_presence(t_k, candidate).passed:
            assert eval_presence(t_k1, candidate).passed

    @settings(max_examples=200, deadline=None)
    @given(
        st.text(alphabet="abc ", min_size=1, max_size=6).filter(str.strip),
        st.text(alphabet="abc ", max_size=30),
        st.integers(min_value=0, max_value=3),
    )
    def test_absence_budget_antitone(self, target, candidate, k):
        t_k = make_test(Presence(target, must_appear=False), max_diffs=k)
        t_k1 = make_test(Presence(target, must_appear=False), max_diffs=k + 1)
        if eval_presence(t_k1, candidate).passed:
            assert eval_presence(t_k, candidate).passed

    def test_insensitive_to_emphasis_and_quotes(self):
        profile = NormalizationProfile(markup_cleanup=True, unicode_harmonize=True)
        test = make_test(Presence('"Rapport annuel"'), profile=profile)
        assert eval_presence(test, "voir « **Rapport annuel** » ici").passed

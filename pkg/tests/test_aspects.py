import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capsmith.aspects import (
    AnalysisError,
    AspectLexicons,
    RuleAspectBackend,
    analyze,
    check_helpfulness,
    check_ocr,
    check_relation,
    check_stats,
    check_takeaway,
    check_visual,
    default_lexicons,
)
from capsmith.model import (
    ASPECT_ORDER,
    AspectEntry,
    FigureKind,
    FigureRecord,
    Satisfied,
)


def fig(figure_text=(), **kw):
    defaults = dict(id="1", kind=FigureKind.CHART, figure_text=tuple(figure_text))
    defaults.update(kw)
    return FigureRecord(**defaults)


class TestOcr:
    def test_token_overlap(self):
        entry = check_ocr("Accuracy vs. epochs for ResNet", ["epochs", "accuracy", "resnet"])
        assert entry.satisfied is Satisfied.YES
        assert len(entry.evidence) == 3

    def test_no_overlap(self):
        assert check_ocr("Our method works well", ["x", "y"]).satisfied is Satisfied.NO

    def test_empty_figure_text_is_unknown(self):
        assert check_ocr("anything at all", []).satisfied is Satisfied.UNKNOWN

    def test_single_letter_series_labels_match(self):
        entry = check_ocr("A is lower than B", ["a", "b"])
        assert entry.satisfied is Satisfied.YES

    def test_short_noise_words_do_not_match(self):
        # two-character tokens below the minimum length never count
        assert check_ocr("it is vs of", ["vs", "of", "it", "is"]).satisfied is Satisfied.NO

    def test_evidence_spans_point_at_matches(self):
        caption = "Accuracy over epochs"
        entry = check_ocr(caption, ["accuracy"])
        (span,) = entry.evidence
        assert caption[span[0] : span[1]].casefold() == "accuracy"


class TestRelation:
    def test_lower_than(self):
        assert check_relation("A is lower than B").satisfied is Satisfied.YES

    def test_higher_than(self):
        assert check_relation("A is higher than B").satisfied is Satisfied.YES

    def test_superlative_in_figure(self):
        assert check_relation("A is the highest in the figure").satisfied is Satisfied.YES
        assert check_relation("A is the lowest in the figure").satisfied is Satisfied.YES

    def test_no_cue(self):
        assert check_relation("Overview of the system architecture").satisfied is Satisfied.NO


class TestStats:
    def test_percent(self):
        assert check_stats("20% of the users agreed").satisfied is Satisfied.YES

    def test_decimal_value(self):
        assert check_stats("The value of x is 0.33").satisfied is Satisfied.YES

    def test_figure_reference_excluded(self):
        assert check_stats("Figure 3: Overview of results").satisfied is Satisfied.NO

    def test_section_and_citation_excluded(self):
        assert check_stats("As shown in Section 4 and [12]").satisfied is Satisfied.NO

    def test_number_glued_to_word_excluded(self):
        assert check_stats("We use ResNet50 as the backbone").satisfied is Satisfied.NO

    def test_mixed_reference_and_real_number(self):
        entry = check_stats("Figure 3 reports a 12% gain")
        assert entry.satisfied is Satisfied.YES


class TestTakeaway:
    def test_shows_that(self):
        entry = check_takeaway("The figure shows that pruning improves accuracy")
        assert entry.satisfied is Satisfied.YES

    def test_overall(self):
        assert (
            check_takeaway("Overall, our method outperforms the baseline").satisfied
            is Satisfied.YES
        )

    def test_no_cue(self):
        assert check_takeaway("Accuracy curves.").satisfied is Satisfied.NO


class TestVisual:
    def test_color(self):
        entry = check_visual("The red dashed line denotes the baseline")
        assert entry.satisfied is Satisfied.YES

    def test_direction_and_size(self):
        assert (
            check_visual("Bars are ordered left to right by size").satisfied
            is Satisfied.YES
        )

    def test_lexicon_words_all_fire(self):
        for word in ("red", "shape", "direction", "size", "position", "opacity"):
            caption = f"The {word} of the elements varies"
            entry = check_visual(caption)
            assert entry.satisfied is Satisfied.YES, word

    def test_no_cue(self):
        assert check_visual("Results of experiment 1").satisfied is Satisfied.NO


def _entries(**statuses):
    base = {name: Satisfied.NO for name in ("ocr", "relation", "stats", "takeaway", "visual")}
    base.update(statuses)
    return {name: AspectEntry(satisfied=s) for name, s in base.items()}


class TestHelpfulness:
    def test_two_aspects_and_enough_words(self):
        caption = "Accuracy is higher than baseline and shows that depth helps"
        entry = check_helpfulness(
            caption, _entries(relation=Satisfied.YES, takeaway=Satisfied.YES)
        )
        assert entry.satisfied is Satisfied.YES

    def test_too_short(self):
        entry = check_helpfulness("Results.", _entries())
        assert entry.satisfied is Satisfied.NO

    def test_one_aspect_is_not_enough(self):
        caption = " ".join(["word"] * 40)
        entry = check_helpfulness(caption, _entries(stats=Satisfied.YES))
        assert entry.satisfied is Satisfied.NO


class TestAnalyze:
    COMPOSITE = "A is lower than B (0.33 vs 0.5), shown by the red bars"

    def test_composition(self):
        report = analyze(self.COMPOSITE, fig(["a", "b"]))
        expected = {
            "ocr": Satisfied.YES,
            "relation": Satisfied.YES,
            "stats": Satisfied.YES,
            "takeaway": Satisfied.NO,
            "visual": Satisfied.YES,
            "helpfulness": Satisfied.YES,
        }
        assert {k: v.satisfied for k, v in report.entries.items()} == expected

    def test_empty_caption(self):
        report = analyze("", fig(["a"]))
        for name in ("ocr", "relation", "stats", "takeaway", "visual", "helpfulness"):
            assert report[name].satisfied is Satisfied.NO

    def test_deterministic(self):
        a = analyze(self.COMPOSITE, fig(["a", "b"]))
        b = analyze(self.COMPOSITE, fig(["a", "b"]))
        assert a == b

    def test_backend_failure_wrapped(self):
        class Broken:
            backend_id = "broken"

            def analyze(self, caption, figure, paragraphs):
                raise ConnectionError("down")

        with pytest.raises(AnalysisError) as exc:
            analyze("caption", fig(), backend=Broken())
        assert exc.value.backend_id == "broken"

    def test_report_has_all_six_aspects(self):
        report = analyze("some caption", fig())
        assert set(report.entries) == set(ASPECT_ORDER)


class TestHttpBackend:
    def _backend(self, responder):
        import httpx

        from capsmith.aspects import HttpAspectBackend

        return HttpAspectBackend(
            url="http://aspects.test/classify",
            client=httpx.Client(transport=httpx.MockTransport(responder)),
        )

    def test_wire_contract(self):
        import httpx
        import json as jsonlib

        seen = {}

        def handler(request):
            seen.update(jsonlib.loads(request.content))
            return httpx.Response(
                200,
                json={
                    "helpfulness": True,
                    "ocr": False,
                    "relation": True,
                    "stats": False,
                    "takeaway": True,
                    "visual": False,
                },
            )

        backend = self._backend(handler)
        report = backend.analyze("the caption", fig(["tok"]), ["para one"])
        assert seen == {
            "caption": "the caption",
            "figure_text": ["tok"],
            "paragraphs": ["para one"],
        }
        assert report["relation"].satisfied is Satisfied.YES
        assert report["visual"].satisfied is Satisfied.NO
        assert report["relation"].backend_id == backend.backend_id

    def test_failure_becomes_analysis_error(self):
        import httpx

        def handler(request):
            return httpx.Response(502, json={})

        backend = self._backend(handler)
        with pytest.raises(AnalysisError) as exc:
            analyze("caption", fig(), backend=backend)
        assert exc.value.backend_id == backend.backend_id

    def test_missing_aspect_rejected(self):
        import httpx

        def handler(request):
            return httpx.Response(200, json={"helpfulness": True})

        backend = self._backend(handler)
        with pytest.raises(AnalysisError):
            analyze("caption", fig(), backend=backend)


class TestLexiconConfig:
    def test_loaded_lexicons_non_empty(self):
        lex = default_lexicons()
        assert lex.relation_cues and lex.takeaway_cues and lex.visual_lexicon

    def test_empty_lexicon_rejected(self):
        with pytest.raises(ValueError):
            AspectLexicons(
                relation_cues=(),
                takeaway_cues=("x",),
                visual_lexicon=("y",),
                number_pattern=r"\d+",
                figure_ref_pattern=r"fig",
            )

    def test_tunable_from_yaml(self):
        lex = AspectLexicons.from_yaml(
            """
relation_cues: ['\\bdiverges from\\b']
takeaway_cues: [reveals]
visual_lexicon: [chartreuse]
number_pattern: '\\d+'
figure_ref_pattern: 'fig \\d+'
helpfulness_min_words: 3
helpfulness_min_aspects: 1
"""
        )
        assert check_relation("A diverges from B", lex).satisfied is Satisfied.YES
        assert check_visual("a chartreuse band", lex).satisfied is Satisfied.YES


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------

_caption = st.text(
    alphabet=st.sampled_from(
        list("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,%()-")
    ),
    max_size=80,
)


class TestProperties:
    @given(_caption, st.lists(st.text(min_size=1, max_size=8), max_size=5))
    @settings(max_examples=150, deadline=None)
    def test_ocr_monotone_in_figure_text(self, caption, extra_tokens):
        base = ["accuracy", "loss"]
        before = check_ocr(caption, base)
        after = check_ocr(caption, base + extra_tokens)
        if before.satisfied is Satisfied.YES:
            assert after.satisfied is Satisfied.YES

    @given(_caption)
    @settings(max_examples=150, deadline=None)
    def test_case_insensitive(self, caption):
        backend = RuleAspectBackend()
        f = fig(["accuracy", "a"])
        lower = backend.analyze(caption, f)
        upper = backend.analyze(caption.upper(), f)
        got = {k: v.satisfied for k, v in lower.entries.items()}
        want = {k: v.satisfied for k, v in upper.entries.items()}
        assert got == want

    @given(_caption)
    @settings(max_examples=150, deadline=None)
    def test_evidence_spans_valid(self, caption):
        report = RuleAspectBackend().analyze(caption, fig(["accuracy", "loss"]))
        for entry in report.entries.values():
            for start, end in entry.evidence:
                assert 0 <= start <= end <= len(caption)

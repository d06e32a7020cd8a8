import itertools

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capsmith.model import (
    CONTENT_ASPECTS,
    AspectEntry,
    AspectReport,
    Satisfied,
)
from capsmith.rating import (
    HeuristicRatingBackend,
    HostedRatingBackend,
    RatingContext,
    RatingError,
    RatingParseError,
    build_context,
    build_prompt,
    heuristic_score,
    parse_rating_response,
    rate,
)


def report_with(yes=(), unknown=(), caption="c"):
    entries = {}
    for name in ("helpfulness",) + CONTENT_ASPECTS:
        if name in yes:
            status = Satisfied.YES
        elif name in unknown:
            status = Satisfied.UNKNOWN
        else:
            status = Satisfied.NO
        entries[name] = AspectEntry(satisfied=status)
    return AspectReport(entries=entries, caption=caption)


class TestBuildPrompt:
    def test_golden_file_substitution(self, fixtures_dir):
        golden = (fixtures_dir / "rating_prompt_golden.txt").read_text("utf-8")
        ctx = RatingContext(paragraph="P", caption="C")
        expected = golden.replace("[paragraph]", "P").replace("[caption]", "C")
        assert build_prompt(ctx) == expected

    def test_contains_substituted_values(self):
        out = build_prompt(RatingContext(paragraph="The paragraph.", caption="The caption."))
        assert 'Paragraph: "The paragraph."' in out
        assert 'Caption: "The caption."' in out

    def test_empty_paragraph_still_emitted(self):
        out = build_prompt(RatingContext(paragraph="", caption="C"))
        assert 'Paragraph: ""' in out

    def test_double_quote_preserved_verbatim(self):
        out = build_prompt(RatingContext(paragraph="p", caption='say "hi"'))
        assert 'Caption: "say "hi""' in out

    def test_placeholder_text_inside_paragraph_not_reexpanded(self):
        out = build_prompt(RatingContext(paragraph="contains [caption] marker", caption="real"))
        assert "contains [caption] marker" in out
        assert 'Caption: "real"' in out


class TestBuildContext:
    def test_concatenates_in_order(self):
        ctx = build_context(["first paragraph.", "second paragraph."], "cap")
        assert ctx.paragraph == "first paragraph.\nsecond paragraph."

    def test_caps_at_sentence_boundary(self):
        sentence = "This sentence is repeated forever. "
        long_text = (sentence * 300).strip()
        ctx = build_context([long_text], "cap", max_chars=200)
        assert len(ctx.paragraph) <= 200
        assert ctx.paragraph.endswith(".")

    def test_empty_mentions_allowed(self):
        assert build_context([], "cap").paragraph == ""

    def test_caption_required(self):
        with pytest.raises(ValueError):
            RatingContext(paragraph="p", caption="")


class TestParseResponse:
    def test_labeled_rating(self):
        assert parse_rating_response("Rating: 4. The caption explains the axes.") == (
            4,
            "The caption explains the axes.",
        )

    def test_inline_rating_keeps_sentence(self):
        raw = "I would rate this caption 6 because it states the takeaway."
        assert parse_rating_response(raw) == (6, raw)

    def test_no_score_raises(self):
        with pytest.raises(RatingParseError):
            parse_rating_response("The caption is fine.")

    def test_score_out_of_band_ignored(self):
        with pytest.raises(RatingParseError):
            parse_rating_response("This scored 9 out of 10.")

    def test_decimal_not_mistaken_for_score(self):
        assert parse_rating_response("Rating: 3. Values rise to 0.45 overall.")[0] == 3

    def test_slash_six_form(self):
        score, explanation = parse_rating_response("Rated 5/6: concise and specific.")
        assert score == 5
        assert explanation == "concise and specific."


class TestHeuristic:
    def test_zero_aspects_scores_one(self):
        score, _ = heuristic_score(report_with())
        assert score == 1

    def test_all_five_scores_six(self):
        score, explanation = heuristic_score(report_with(yes=CONTENT_ASPECTS))
        assert score == 6
        assert "all five" in explanation

    def test_two_aspects_scores_three(self):
        score, explanation = heuristic_score(report_with(yes=("stats", "visual")))
        assert score == 3
        assert "ocr, relation, takeaway" in explanation

    def test_unknown_counts_zero(self):
        score, _ = heuristic_score(report_with(unknown=("ocr",)))
        assert score == 1

    def test_exhaustive_all_combinations(self):
        for bits in itertools.product([False, True], repeat=5):
            yes = tuple(n for n, b in zip(CONTENT_ASPECTS, bits) if b)
            score, explanation = heuristic_score(report_with(yes=yes))
            assert score == 1 + sum(bits)
            assert explanation

    @given(st.sets(st.sampled_from(CONTENT_ASPECTS)))
    @settings(max_examples=64, deadline=None)
    def test_monotone(self, yes):
        base_score, _ = heuristic_score(report_with(yes=tuple(yes)))
        for extra in set(CONTENT_ASPECTS) - yes:
            more, _ = heuristic_score(report_with(yes=tuple(yes | {extra})))
            assert more >= base_score

    def test_deterministic(self):
        rep = report_with(yes=("relation",))
        assert heuristic_score(rep) == heuristic_score(rep)

    def test_backend_wraps_score(self):
        backend = HeuristicRatingBackend()
        ctx = RatingContext(paragraph="p", caption="A caption without cues")
        rating = backend.rate(ctx, report_with(yes=("stats",)))
        assert rating.score == 2
        assert rating.backend_id == backend.backend_id

    def test_backend_computes_report_when_missing(self):
        backend = HeuristicRatingBackend()
        ctx = RatingContext(paragraph="p", caption="A is lower than B overall, 20% better")
        rating = backend.rate(ctx)
        # relation + stats + takeaway satisfied; ocr unknown without figure text
        assert rating.score == 4


def _mock_backend(responses):
    """HostedRatingBackend wired to a canned transport."""
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        i = min(calls["n"], len(responses) - 1)
        calls["n"] += 1
        status, content = responses[i]
        if status != 200:
            return httpx.Response(status, json={"error": "boom"})
        return httpx.Response(
            200, json={"choices": [{"message": {"content": content}}]}
        )

    client = httpx.Client(transport=httpx.MockTransport(handler))
    backend = HostedRatingBackend(
        endpoint="http://rating.test/v1/chat/completions",
        model="test-model",
        client=client,
    )
    return backend, calls


class TestHostedBackend:
    def test_successful_rating(self):
        backend, _ = _mock_backend([(200, "Rating: 5. Clear and specific.")])
        rating = rate(RatingContext(paragraph="p", caption="c"), backend)
        assert rating.score == 5
        assert rating.explanation == "Clear and specific."
        assert rating.backend_id == "hosted:test-model"
        assert rating.raw_response == "Rating: 5. Clear and specific."

    def test_retry_once_on_parse_failure(self):
        backend, calls = _mock_backend(
            [(200, "no score here"), (200, "Rating: 2. Thin caption.")]
        )
        rating = rate(RatingContext(paragraph="p", caption="c"), backend)
        assert rating.score == 2
        assert calls["n"] == 2

    def test_parse_failure_after_retry_raises(self):
        backend, calls = _mock_backend([(200, "still nothing")])
        with pytest.raises(RatingParseError):
            rate(RatingContext(paragraph="p", caption="c"), backend)
        assert calls["n"] == 2

    def test_transport_failure_raises_rating_error(self):
        backend, _ = _mock_backend([(500, "")])
        with pytest.raises(RatingError):
            rate(RatingContext(paragraph="p", caption="c"), backend)

    def test_request_carries_prompt_as_single_user_message(self):
        seen = {}

        def handler(request: httpx.Request) -> httpx.Response:
            import json

            seen.update(json.loads(request.content))
            return httpx.Response(
                200, json={"choices": [{"message": {"content": "Rating: 3. Fine."}}]}
            )

        client = httpx.Client(transport=httpx.MockTransport(handler))
        backend = HostedRatingBackend(
            endpoint="http://rating.test/chat", model="m", client=client
        )
        ctx = RatingContext(paragraph="Para text", caption="Cap text")
        rate(ctx, backend)
        assert seen["model"] == "m"
        assert len(seen["messages"]) == 1
        assert seen["messages"][0]["role"] == "user"
        assert seen["messages"][0]["content"] == build_prompt(ctx)

    @given(st.integers(min_value=1, max_value=6))
    @settings(max_examples=20, deadline=None)
    def test_scores_always_in_bounds(self, n):
        backend, _ = _mock_backend([(200, f"Rating: {n}. Some explanation.")])
        rating = rate(RatingContext(paragraph="p", caption="c"), backend)
        assert 1 <= rating.score <= 6

"""Caption usefulness rating (1-6) with an explanation.

Two backends: a hosted chat model called with a fixed prompt template
(assets/rating_prompt.txt, substituted verbatim), and a deterministic
offline heuristic derived from the aspect report.  The score scale is
1 to 6, 6 highest.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional, Protocol

import httpx

from .aspects import RuleAspectBackend
from .model import (
    CONTENT_ASPECTS,
    AspectReport,
    CaptionRating,
    FigureKind,
    FigureRecord,
    Satisfied,
)

HEURISTIC_BACKEND_ID = "heuristic:aspect-count-v1"


class RatingError(RuntimeError):
    """The rating backend failed (transport or repeated parse failure)."""


class RatingParseError(RatingError):
    def __init__(self, raw: str):
        super().__init__(f"no score in [1, 6] found in response: {raw!r}")
        self.raw = raw


@dataclass(frozen=True)
class RatingContext:
    """Inputs to a rating call.

    ``paragraph`` is the concatenation of the figure-mentioning paragraphs
    (may be empty when the figure is never mentioned); ``caption`` is the
    text being rated and must be non-empty.
    """

    paragraph: str
    caption: str

    def __post_init__(self) -> None:
        if not self.caption:
            raise ValueError("rating context requires a non-empty caption")


_SENTENCE_END_RE = re.compile(r"[.!?](?=\s|$)")


def build_context(
    mention_paragraphs: list[str] | tuple[str, ...],
    caption: str,
    max_chars: int = 4000,
) -> RatingContext:
    """Assemble the paragraph context, capped at a sentence boundary."""
    paragraph = "\n".join(mention_paragraphs)
    if len(paragraph) > max_chars:
        head = paragraph[:max_chars]
        ends = [m.end() for m in _SENTENCE_END_RE.finditer(head)]
        paragraph = head[: ends[-1]] if ends else head
    return RatingContext(paragraph=paragraph, caption=caption)


@lru_cache(maxsize=1)
def prompt_template() -> str:
    return (
        resources.files("capsmith.assets")
        .joinpath("rating_prompt.txt")
        .read_text("utf-8")
    )


_PLACEHOLDER_RE = re.compile(r"\[(paragraph|caption)\]")


def build_prompt(ctx: RatingContext) -> str:
    """Substitute the context into the template; no other transformation.

    Single-pass substitution, so a paragraph containing the literal text
    "[caption]" cannot hijack the second placeholder.
    """
    values = {"paragraph": ctx.paragraph, "caption": ctx.caption}
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], prompt_template())


_LEADING_LABEL_RE = re.compile(
    r"^\s*(?:(?:overall\s+)?(?:rating|rate|score)d?\s*[:=\-]?\s*)?"
    r"([1-6])\s*(?:/\s*6|out\s+of\s+6)?\s*[.:,;\-]\s*",
    re.IGNORECASE,
)
_AFTER_KEYWORD_RE = re.compile(r"\b(?:rating|rate)d?\b", re.IGNORECASE)
# A standalone small integer: not part of a larger number or decimal.
_SCORE_RE = re.compile(r"(?<!\d)(?<!\d\.)([1-6])(?!\.?\d)")


def parse_rating_response(raw: str) -> tuple[int, str]:
    """Extract (score, explanation) from a model response.

    The score is the first integer in [1, 6] after the word "rating"/"rate",
    falling back to the first standalone integer in [1, 6].  The explanation
    is the response with any leading score label stripped.
    """
    if not raw.strip():
        raise RatingParseError(raw)
    score: Optional[int] = None
    kw = _AFTER_KEYWORD_RE.search(raw)
    if kw:
        m = _SCORE_RE.search(raw, kw.end())
        if m:
            score = int(m.group(1))
    if score is None:
        m = _SCORE_RE.search(raw)
        if m:
            score = int(m.group(1))
    if score is None:
        raise RatingParseError(raw)

    explanation = raw.strip()
    label = _LEADING_LABEL_RE.match(explanation)
    if label and label.group(1) and label.end() < len(explanation):
        explanation = explanation[label.end() :].strip()
    if not explanation:
        explanation = raw.strip()
    return score, explanation


def heuristic_score(report: AspectReport) -> tuple[int, str]:
    """Offline score: 1 + number of satisfied content aspects.

    Unknown counts as zero.  The explanation lists missing aspects in the
    fixed report order.
    """
    yes = [
        name
        for name in CONTENT_ASPECTS
        if report.entries[name].satisfied is Satisfied.YES
    ]
    score = 1 + len(yes)
    if len(yes) == len(CONTENT_ASPECTS):
        explanation = (
            "The caption covers all five content aspects: "
            + ", ".join(CONTENT_ASPECTS)
            + "."
        )
    else:
        missing = [name for name in CONTENT_ASPECTS if name not in yes]
        explanation = (
            f"The caption covers {len(yes)} of {len(CONTENT_ASPECTS)} content "
            "aspects. Missing: " + ", ".join(missing) + "."
        )
    return score, explanation


class RatingBackend(Protocol):
    backend_id: str

    def rate(
        self, ctx: RatingContext, report: Optional[AspectReport] = None
    ) -> CaptionRating: ...


@dataclass(frozen=True)
class HeuristicRatingBackend:
    """Deterministic offline backend driven by the aspect report.

    When no report is supplied, one is computed from the caption alone with
    the rule backend (no figure text, so the ocr aspect reads unknown).
    """

    backend_id: str = HEURISTIC_BACKEND_ID

    def rate(
        self, ctx: RatingContext, report: Optional[AspectReport] = None
    ) -> CaptionRating:
        if report is None:
            placeholder = FigureRecord(id="1", kind=FigureKind.OTHER)
            report = RuleAspectBackend().analyze(ctx.caption, placeholder)
        score, explanation = heuristic_score(report)
        return CaptionRating(
            score=score, explanation=explanation, backend_id=self.backend_id
        )


@dataclass
class HostedRatingBackend:
    """Chat-completion backend; endpoint, model, and timeout are config."""

    endpoint: str
    model: str
    api_key: str = ""
    timeout: float = 30.0
    client: Optional[httpx.Client] = None

    @property
    def backend_id(self) -> str:
        return f"hosted:{self.model}"

    def _call(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        http = self.client if self.client is not None else httpx
        resp = http.post(
            self.endpoint, json=payload, headers=headers, timeout=self.timeout
        )
        resp.raise_for_status()
        data = resp.json()
        return data["choices"][0]["message"]["content"]

    def rate(
        self, ctx: RatingContext, report: Optional[AspectReport] = None
    ) -> CaptionRating:
        prompt = build_prompt(ctx)
        try:
            raw = self._call(prompt)
        except httpx.HTTPError as exc:
            raise RatingError(f"rating backend transport failure: {exc}") from exc
        try:
            score, explanation = parse_rating_response(raw)
        except RatingParseError:
            # One bounded retry before surfacing the failure.
            try:
                raw = self._call(prompt)
            except httpx.HTTPError as exc:
                raise RatingError(f"rating backend transport failure: {exc}") from exc
            score, explanation = parse_rating_response(raw)
        return CaptionRating(
            score=score,
            explanation=explanation,
            backend_id=self.backend_id,
            raw_response=raw,
        )


def rate(
    ctx: RatingContext,
    backend: RatingBackend,
    report: Optional[AspectReport] = None,
) -> CaptionRating:
    """Produce a CaptionRating via the given backend."""
    return backend.rate(ctx, report)
